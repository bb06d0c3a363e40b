//! Joint input and quantizer optimization at one relay budget.

use cf_relay::joint::{kkt_residuals, optimize_cf, CfOptions, StartPoint};
use cf_relay::scenario::rayleigh_channel;
use cf_relay::AntennaProfile;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> cf_relay::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let ch = rayleigh_channel(AntennaProfile::new(3, 2, 2, 2)?, 0.05, &mut rng);
    let c0 = 3.0;
    for start in [StartPoint::Isotropic, StartPoint::CutsetMaximizer, StartPoint::WaterfillingPooled] {
        let opts = CfOptions::new(1.0).with_start(start.clone());
        let res = optimize_cf(&ch, c0, &opts)?;
        let kkt = kkt_residuals(&ch, &res, c0, 1.0)?;
        println!(
            "{start:?}: rate {:.6} mu {:.5} used {:.4} bits, {} inner / {} outer, kkt {:.1e}{}",
            res.rate,
            res.mu,
            res.constraint,
            res.inner_iters,
            res.outer_iters,
            kkt.max(),
            if res.timeshare.is_some() { " (time-shared)" } else { "" }
        );
    }
    Ok(())
}
