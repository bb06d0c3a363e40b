use cf_relay::harness::run_sweep;
use cf_relay::scenario::{generate_scenario, CellularConfig};
use cf_relay::AntennaProfile;

fn main() -> cf_relay::Result<()> {
    let cfg = CellularConfig { seed: 1, ..Default::default() };
    let ch = generate_scenario(&cfg, AntennaProfile::new(2, 3, 3, 4)?)?;
    let grid: Vec<f64> = (0..=20).step_by(2).map(f64::from).collect();
    let rows = run_sweep(&ch, cfg.source_power(), &grid, 1)?;
    println!("{:>4} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "c0", "cutset", "joint", "wf_sd", "wf_srd", "iid_q", "cgap");
    for r in &rows {
        println!(
            "{:>4} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            r.c0, r.cutset, r.cf_joint, r.cf_wf_sd, r.cf_wf_srd, r.cf_iid_q, r.cf_constant_gap
        );
    }
    Ok(())
}
