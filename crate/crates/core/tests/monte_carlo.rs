use cf_relay::harness::{run_slope_map, SlopeMapConfig};
use cf_relay::joint::{optimize_cf, CfOptions};
use cf_relay::scenario::{gaussian_matrix, generate_scenario, rayleigh_channel, CellularConfig};
use cf_relay::AntennaProfile;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[test]
fn rayleigh_entries_have_unit_power() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let n = 200_000;
    let m = gaussian_matrix(n, 1, &mut rng);
    let power = m.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    let mean = m.iter().sum::<cf_relay::C64>() / n as f64;
    let re_var = m.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
    assert!((power - 1.0).abs() < 0.01, "{power}");
    assert!(mean.norm() < 0.01);
    assert!((re_var - 0.5).abs() < 0.01);
}

#[test]
fn average_relay_gain_grows_with_budget() {
    let profile = AntennaProfile::new(2, 3, 3, 4).unwrap();
    let budgets = [0.0, 4.0, 12.0];
    let mut avg = [0.0; 3];
    let n = 8;
    for seed in 0..n {
        let cfg = CellularConfig { seed, ..Default::default() };
        let ch = generate_scenario(&cfg, profile).unwrap();
        let opts = CfOptions::new(cfg.source_power());
        for (k, &c0) in budgets.iter().enumerate() {
            avg[k] += optimize_cf(&ch, c0, &opts).unwrap().rate / n as f64;
        }
    }
    assert!(avg[1] > avg[0] + 2.0, "{avg:?}");
    assert!(avg[2] > avg[1], "{avg:?}");
    assert!(avg[1] - avg[0] <= 4.0 + 1e-6);
}

#[test]
fn first_slope_increases_with_relay_antennas() {
    let cfg = SlopeMapConfig {
        s: 2,
        t: 6,
        r_range: 1..=4,
        d_range: 2..=2,
        n_realizations: 30,
        max_index: 1,
        ..Default::default()
    };
    let rows = run_slope_map(&cfg).unwrap();
    let slopes: Vec<f64> = rows.iter().map(|r| r.avg_slope).collect();
    assert_eq!(slopes.len(), 4);
    assert!(slopes.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{slopes:?}");
    assert!(slopes.iter().all(|&s| (0.0..1.0).contains(&s)));
}

#[test]
fn small_noise_makes_deterministic_components_worth_a_bit() {
    // (3,2,2,0): relay sees two streams the destination cannot separate
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let ch = rayleigh_channel(AntennaProfile::new(3, 2, 2, 0).unwrap(), 1e-6, &mut rng);
    let opts = CfOptions::new(1.0);
    let a = optimize_cf(&ch, 1.0, &opts).unwrap().rate;
    let b = optimize_cf(&ch, 2.0, &opts).unwrap().rate;
    assert!((b - a) > 0.99 && (b - a) <= 1.0 + 1e-6, "{}", b - a);
}
