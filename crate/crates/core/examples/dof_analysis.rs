//! Degrees-of-freedom formulas and their finite-SNR estimates.

use cf_relay::dof::{dof_report, estimate_dof_gain, DofScheme};
use cf_relay::scenario::rayleigh_channel;
use cf_relay::AntennaProfile;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> cf_relay::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    for (profile, alpha) in [((3, 2, 2, 0), f64::INFINITY), ((2, 3, 3, 0), f64::INFINITY), ((2, 3, 3, 4), f64::INFINITY), ((2, 3, 3, 4), 1.0)] {
        let p = AntennaProfile::new(profile.0, profile.1, profile.2, profile.3)?;
        let report = dof_report(p, alpha)?;
        let ch = rayleigh_channel(p, 1.0, &mut rng);
        let joint = estimate_dof_gain(&ch, DofScheme::Joint, alpha, 1e5, 1e7, 1.0)?;
        let iid = estimate_dof_gain(&ch, DofScheme::IidQuantizer, alpha, 1e5, 1e7, 1.0)?;
        println!(
            "{p} alpha {alpha}: gain {} (est {:.3}), iid {:.3} (est {:.3})",
            report.dof_gain_opt, joint.gain, report.dof_gain_iid, iid.gain
        );
        if report.combiner_rows > 0 {
            let zf = estimate_dof_gain(&ch, DofScheme::ZeroForcing, alpha, 1e5, 1e7, 1.0)?;
            println!("    zero-forcing combiner with {} rows: est {:.3}", report.combiner_rows, zf.gain);
        }
    }
    Ok(())
}
