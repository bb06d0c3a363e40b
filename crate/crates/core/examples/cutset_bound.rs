//! Cut-set upper bound next to the water-filling benchmarks.

use cf_relay::input::{cutset_bound, waterfilling_dest, waterfilling_pooled, InputOptConfig};
use cf_relay::rates::{dest_only_rate, full_rate};
use cf_relay::scenario::rayleigh_channel;
use cf_relay::AntennaProfile;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> cf_relay::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let ch = rayleigh_channel(AntennaProfile::new(2, 2, 2, 1)?, 0.1, &mut rng);
    let cfg = InputOptConfig::new(1.0);
    let direct = dest_only_rate(&ch, &waterfilling_dest(&ch, 1.0)?)?;
    let pooled = full_rate(&ch, &waterfilling_pooled(&ch, 1.0)?)?;
    println!("direct link {direct:.4}, pooled receiver {pooled:.4}");
    println!("{:>5} {:>9} {:>9} {:>6}", "c0", "cutset", "dual", "w");
    for c0 in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let cut = cutset_bound(&ch, c0, &cfg)?;
        println!("{c0:>5.1} {:>9.5} {:>9.5} {:>6.3}", cut.value, cut.dual_value, cut.weight);
    }
    Ok(())
}
