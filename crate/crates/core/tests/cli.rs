use std::fs;
use std::process::{Command, Output};

fn cfrelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfrelay")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&cfrelay(&["--help"])), 0);
    assert_eq!(code(&cfrelay(&["sweep", "--help"])), 0);
    assert_eq!(code(&cfrelay(&[])), 1);
    assert_eq!(code(&cfrelay(&["sweep", "--no-such-flag"])), 1);
    assert_eq!(code(&cfrelay(&["sweep", "--c0-grid", "3:1:1"])), 1);
    assert_eq!(code(&cfrelay(&["dof", "--profile", "2,3"])), 1);
    assert_eq!(code(&cfrelay(&["slope-map", "--r-range", "0:3"])), 1);
}

#[test]
fn missing_and_malformed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.txt");
    let out = cfrelay(&["sweep", "--channel", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 1);

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 1 1 0 1.0\nH_SR 1 1\n1,0\nH_SD 1 1\nnot-a-number\n").unwrap();
    let out = cfrelay(&["sweep", "--channel", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));

    let cfg = dir.path().join("cell.cfg");
    fs::write(&cfg, "bandwidth_hz = 1e6\nbogus_key = 3\n").unwrap();
    let out = cfrelay(&["gen-scenario", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sweep_reads_generated_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("ch.txt");
    let out = cfrelay(&["gen-scenario", "--seed", "4", "--profile", "2,2,2,1", "--out", ch.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&ch).unwrap();
    assert!(text.starts_with("# "));
    let csv_path = dir.path().join("sweep.csv");
    let out = cfrelay(&[
        "sweep",
        "--channel",
        ch.to_str().unwrap(),
        "--power",
        "1",
        "--c0-grid",
        "0:4:2",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "c0,cutset,cf_joint,cf_wf_sd,cf_wf_srd,cf_iid_q,cf_constant_gap"
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let one = cfrelay(&["gap-audit", "--trials", "6", "--seed", "9", "--parallel", "1"]);
    let three = cfrelay(&["gap-audit", "--trials", "6", "--seed", "9", "--parallel", "3"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, three.stdout);

    let one = cfrelay(&["sweep", "--seed", "2", "--c0-grid", "0:6:3", "--parallel", "1"]);
    let two = cfrelay(&["sweep", "--seed", "2", "--c0-grid", "0:6:3", "--parallel", "2"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, two.stdout);

    let a = cfrelay(&["gen-scenario", "--seed", "17"]);
    let b = cfrelay(&["gen-scenario", "--seed", "17"]);
    let c = cfrelay(&["gen-scenario", "--seed", "18"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn dof_prints_formula_and_estimates() {
    let out = cfrelay(&["dof", "--profile", "3,2,2,0"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let joint = text.lines().find(|l| l.starts_with("joint,")).unwrap();
    let fields: Vec<&str> = joint.split(',').collect();
    assert_eq!(fields[1], "1");
    let est: f64 = fields[2].parse().unwrap();
    assert!((est - 1.0).abs() < 0.05, "{est}");
}
