//! Simultaneous congruence diagonalization of a conditional covariance pair.

use cf_relay::linalg::{self, c, CMatrix};
use cf_relay::quantizer::gen_eig_system;
use cf_relay::scenario::rayleigh_channel;
use cf_relay::AntennaProfile;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> cf_relay::Result<()> {
    // a small hand-made pencil with B ⪰ A
    let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
    let b = &a + CMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
    let sys = linalg::simdiag_congruence(&a, &b)?;
    let ca = sys.transform.adjoint() * &a * &sys.transform;
    let cb = sys.transform.adjoint() * &b * &sys.transform;
    println!("lambda = {:?}", sys.eigenvalues);
    println!("|C^H A C - I|_F = {:.3e}", (ca - linalg::identity(2)).norm());
    println!("|offdiag(C^H B C)|_F = {:.3e}", (cb.clone() - CMatrix::from_diagonal(&cb.diagonal())).norm());

    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let ch = rayleigh_channel(AntennaProfile::new(2, 2, 4, 1)?, 0.1, &mut rng);
    let gen = gen_eig_system(&ch, &linalg::identity(2))?;
    println!("relay pencil of (2,2,4,1): lambda = {:?}", gen.eigenvalues);
    Ok(())
}
