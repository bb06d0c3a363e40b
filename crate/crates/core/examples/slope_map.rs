use cf_relay::harness::{run_slope_map, SlopeMapConfig};

fn main() -> cf_relay::Result<()> {
    let cfg = SlopeMapConfig {
        r_range: 1..=8,
        d_range: 1..=8,
        n_realizations: 20,
        max_index: 3,
        ..Default::default()
    };
    let rows = run_slope_map(&cfg)?;
    for i in 1..=cfg.max_index {
        println!("average slope of component {i} (rows r, columns d)");
        for r in cfg.r_range.clone() {
            let line: Vec<String> = rows
                .iter()
                .filter(|row| row.r == r && row.i == i)
                .map(|row| format!("{:.2}", row.avg_slope))
                .collect();
            println!("  r={r:<2} {}", line.join(" "));
        }
    }
    Ok(())
}
