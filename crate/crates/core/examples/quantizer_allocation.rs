//! Reverse water-filling of a relay budget across transformed components.

use cf_relay::channel::noiseless_rank_profile;
use cf_relay::input::isotropic;
use cf_relay::quantizer::{allocation_for_budget, gen_eig_system, slope_profile};
use cf_relay::rates::cf_rate_minform;
use cf_relay::scenario::rayleigh_channel;
use cf_relay::AntennaProfile;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> cf_relay::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let ch = rayleigh_channel(AntennaProfile::new(2, 2, 4, 2)?, 0.05, &mut rng);
    let s_x = isotropic(2, 1.0);
    let gen = gen_eig_system(&ch, &s_x)?;
    let slopes = slope_profile(&gen, &noiseless_rank_profile(&ch, &s_x)?);
    println!("lambda       {:?}", gen.eigenvalues);
    println!("critical C0  {:?}", slopes.critical_budgets);
    println!("slopes       {:?}", slopes.slopes_at_critical);
    println!("reversely degraded: {}", slopes.n_reversely_degraded);

    println!("{:>6} {:>8} {:>10}  rates", "c0", "mu", "R");
    for c0 in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let (alloc, mu) = allocation_for_budget(&gen, c0)?;
        let rate = cf_rate_minform(&ch, &s_x, &alloc.quantizer(), c0)?;
        let rates: Vec<String> = alloc.rates_c.iter().map(|v| format!("{v:.3}")).collect();
        println!("{c0:>6.2} {mu:>8.4} {rate:>10.5}  [{}]", rates.join(", "));
    }
    Ok(())
}
