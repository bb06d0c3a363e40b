//! Random channels: distance between the optimized rate and the cut-set bound.

use cf_relay::harness::{run_gap_audit, GapAuditConfig};

fn main() -> cf_relay::Result<()> {
    let cfg = GapAuditConfig { n_trials: 40, ..Default::default() };
    let (rows, summary) = run_gap_audit(&cfg)?;
    for r in rows.iter().filter(|r| r.gap > 0.5 * r.bound) {
        println!("trial {:>3} ({},{},{},{}) c0 {:.2}: gap {:.3} of {}", r.trial, r.s, r.d, r.r, r.t, r.c0, r.gap, r.bound);
    }
    println!("{summary:?}");
    Ok(())
}
