use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn worldsheet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_worldsheet"))
        .args(args)
        .env_remove("WORLDSHEET_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn find<'a>(recs: &'a [Value], kind: &str) -> Vec<&'a Value> {
    recs.iter().filter(|r| r["record"] == kind).collect()
}

const SMALL: &[&str] = &["--window", "20", "--samples", "401", "--nodes", "400", "--t-final", "5"];

fn small(extra: &[&str]) -> Vec<String> {
    SMALL.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: Vec<String>) -> Output {
    let mut all = vec!["run".to_string()];
    all.extend(args);
    let refs: Vec<&str> = all.iter().map(String::as_str).collect();
    worldsheet(&refs)
}

/// Straight string whose velocity along itself flips sign across `theta = 0`,
/// so characteristics from the two halves cross.
fn crossing_data(path: &Path) {
    let mut s = String::from("# periodic = false\ntheta p0 p1 p2 p3 q0 q1 q2 q3\n");
    for i in 0..201 {
        let t = -10.0 + 0.1 * i as f64;
        s.push_str(&format!("{t} 0 20 {t} 0 1 0 {} 0\n", 3.0 * t.tanh()));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn family_run_writes_snapshots_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(small(&["--epsilon", "1e-3", "-o", out]));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&dir.path().join("run_diagnostics.jsonl"));
    let runs = find(&recs, "run");
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0]["termination"]["kind"], "reached-t");
    assert!(runs[0]["max_delta"].as_f64().unwrap() < 0.0);
    assert!(!find(&recs, "verdict").is_empty());
    assert_eq!(find(&recs, "summary")[0]["exit_code"], 0);

    let csv = std::fs::read_to_string(dir.path().join("run_cartesian_snapshots.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("chart,t,theta,x0,x1,x2,x3,v0"));
    assert!(header.ends_with("lambda_minus,lambda_plus,delta,horizon_gap"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn data_inside_the_horizon_margin_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(small(&["--p-bar", "2.05,0,0", "-o", dir.path().to_str().unwrap()]));
    assert_eq!(o.status.code(), Some(4));
    let recs = records(&dir.path().join("run_diagnostics.jsonl"));
    assert_eq!(find(&recs, "error")[0]["kind"], "horizon-violation");
    assert!(find(&recs, "run").is_empty());
}

#[test]
fn crossing_speeds_are_refused_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("cross.dat");
    crossing_data(&data);
    let out = dir.path().to_str().unwrap();
    let o = run(small(&["--data", data.to_str().unwrap(), "-o", out]));
    assert_eq!(o.status.code(), Some(3));
    let recs = records(&dir.path().join("run_diagnostics.jsonl"));
    let a = find(&recs, "assumptions")[0];
    assert_eq!(a["ordering"]["passed"], false);
    let w = a["witness"].as_array().unwrap();
    assert!(w[0].as_f64().unwrap() < w[1].as_f64().unwrap());
    assert_eq!(find(&recs, "error")[0]["kind"], "assumption-violated");

    // forced through, the characteristics cross
    let o = run(small(&["--data", data.to_str().unwrap(), "-o", out, "--no-enforce", "--prefix", "forced"]));
    assert_eq!(o.status.code(), Some(5));
    let recs = records(&dir.path().join("forced_diagnostics.jsonl"));
    let r = find(&recs, "run")[0];
    assert_eq!(r["termination"]["kind"], "gap-collapse");
    assert!(r["final_time"].as_f64().unwrap() < 5.0);
}

#[test]
fn identical_configs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[data]\nepsilon = 0.01\nwindow = 20.0\nsamples = 401\n[grid]\nnodes = 300\ncfl = 0.7\ninterpolation = \"cubic\"\n[solver]\nt_final = 3.0\n[output]\ndir = \"out\"\nwrite_snapshots = false\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let text = |prefix: &str| {
        let o = worldsheet(&["run", "-c", c, "--prefix", prefix]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let t = std::fs::read_to_string(dir.path().join("out").join(format!("{prefix}_diagnostics.jsonl"))).unwrap();
        t.replace(&format!("\"prefix\":\"{prefix}\""), "")
    };
    assert_eq!(text("a"), text("b"));
}

#[test]
fn unknown_config_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[grid]\nnodez = 100\n").unwrap();
    let o = worldsheet(&["run", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nodez"));
}

#[test]
fn generated_data_round_trips_through_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("loop.dat");
    let o = worldsheet(&[
        "gen-data",
        "--profile",
        "closed-loop",
        "--epsilon",
        "0.01",
        "--samples",
        "256",
        "-O",
        data.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&data).unwrap().contains("periodic = true"));
    let o = worldsheet(&[
        "run",
        "--data",
        data.to_str().unwrap(),
        "--nodes",
        "256",
        "--t-final",
        "2",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_worldsheet"))
        .args(["run", "--no-snapshots"])
        .args(SMALL)
        .env("WORLDSHEET_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("run_diagnostics.jsonl").exists());
}

#[test]
fn both_solvers_and_both_charts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(small(&["--epsilon", "0.05", "--solver", "both", "-o", out, "--prefix", "b"]));
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&dir.path().join("b_diagnostics.jsonl"));
    assert!(find(&recs, "cross-solver")[0]["max_position_deviation"].as_f64().unwrap() < 5e-3);
    assert!(dir.path().join("b_upwind_snapshots.csv").exists());

    let o = run(small(&["--epsilon", "0.05", "--solver", "spherical", "-o", out, "--prefix", "s"]));
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&dir.path().join("s_diagnostics.jsonl"));
    assert!(find(&recs, "cross-chart")[0]["max_position_deviation"].as_f64().unwrap() < 1e-5);
}

#[test]
fn verify_reports_every_suite_and_catches_a_sign_error() {
    let o = worldsheet(&["verify", "--suite-samples", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let lines: Vec<Value> =
        String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), worldsheet::verify::SUITES.len());
    assert!(lines.iter().all(|l| l["passed"] == true && l["measured"].is_number()));

    let o = worldsheet(&[
        "verify",
        "--suite-samples",
        "30",
        "--suite",
        "source-identity",
        "--suite",
        "cross-solver",
        "--mutation",
        "flip-inner-product-term",
    ]);
    assert_eq!(o.status.code(), Some(5));
    let lines: Vec<Value> =
        String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.iter().all(|l| l["passed"] == false));
}

#[test]
fn flat_limit_suite_passes_exactly() {
    let o = worldsheet(&["verify", "--metric", "minkowski", "--suite", "flat-limit", "--suite-samples", "30"]);
    assert_eq!(o.status.code(), Some(0));
    let l: Value = serde_json::from_str(String::from_utf8_lossy(&o.stdout).lines().next().unwrap()).unwrap();
    assert_eq!(l["measured"], 0.0);
}

#[test]
fn epsilon_sweep_fits_a_quadratic_interaction() {
    let dir = tempfile::tempdir().unwrap();
    let o = worldsheet(&[
        "sweep",
        "--axis",
        "epsilon",
        "--values",
        "1e-2,5e-3,2.5e-3",
        "--window",
        "20",
        "--samples",
        "401",
        "--nodes",
        "400",
        "--t-final",
        "10",
        "--no-snapshots",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let fit: Value = serde_json::from_str(String::from_utf8_lossy(&o.stdout).trim()).unwrap();
    assert!((fit["q_v_exponent"].as_f64().unwrap() - 2.0).abs() < 0.2);
    let csv = std::fs::read_to_string(dir.path().join("run_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn sweep_records_failed_runs_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let o = worldsheet(&[
        "sweep",
        "--axis",
        "t-final",
        "--values",
        "1,2",
        "--p-bar",
        "2.05,0,0",
        "--window",
        "20",
        "--samples",
        "201",
        "--nodes",
        "200",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(5));
    let recs = records(&dir.path().join("run_sweep.jsonl"));
    let runs = find(&recs, "sweep-run");
    assert_eq!(runs.len(), 2);
    assert!(runs.iter().all(|r| r["termination"] == "horizon-violation" && r["error"].is_string()));
}

#[test]
fn time_sweep_keeps_the_sup_norm_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let o = worldsheet(&[
        "sweep",
        "--axis",
        "t-final",
        "--values",
        "5,10,20",
        "--epsilon",
        "0.01",
        "--window",
        "40",
        "--samples",
        "801",
        "--nodes",
        "800",
        "--no-snapshots",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let fit: Value = serde_json::from_str(String::from_utf8_lossy(&o.stdout).trim()).unwrap();
    assert!(fit["max_v_inf_ratio"].as_f64().unwrap() <= 2.0);
}

#[test]
fn negative_final_time_runs_backwards() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["--window", "20", "--samples", "401", "--nodes", "400", "--t-final=-3", "-o", out];
    let o = run(args.iter().map(|s| s.to_string()).collect());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&dir.path().join("run_diagnostics.jsonl"));
    let runs = find(&recs, "run");
    assert_eq!(runs[0]["termination"]["kind"], "reached-t");
    assert!((runs[0]["final_time"].as_f64().unwrap() + 3.0).abs() < 1e-9, "{}", runs[0]);

    let o = run(vec!["--t-final=-3".into(), "--solver".into(), "upwind".into(), "-o".into(), out.into()]);
    assert_eq!(o.status.code(), Some(2));
}
