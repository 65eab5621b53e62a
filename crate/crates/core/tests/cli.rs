//! Exercises the `qtomo` binary through its command line.

use std::path::Path;
use std::process::{Command, Output};

use qtomo::estimate::mse;
use qtomo::harness::io;
use qtomo::linalg::trace;
use qtomo::qcore::true_state_rank2;

fn qtomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtomo")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = qtomo(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.csv");
    ok(&["simulate", "--n", "2", "--m", "1000", "--state", "rank2", "--seed", "7", "--out", p(&c)]);
    let text = std::fs::read_to_string(&c).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(text.lines().next(), Some("setting,outcome,count"));
    assert_eq!(rows.len(), 36);
    for group in rows.chunks(4) {
        let setting = group[0].split(',').next().unwrap();
        let total: u64 = group
            .iter()
            .map(|r| {
                let f: Vec<&str> = r.split(',').collect();
                assert_eq!(f[0], setting);
                f[2].parse::<u64>().unwrap()
            })
            .sum();
        assert_eq!(total, 1000);
    }
}

#[test]
fn estimate_writes_density_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (c, rho, manifest, truth) =
        (dir.path().join("c.csv"), dir.path().join("rho.csv"), dir.path().join("run.json"), dir.path().join("t.csv"));
    ok(&["simulate", "--n", "2", "--seed", "7", "--out", p(&c)]);
    ok(&["true-state", "--n", "2", "--out", p(&truth)]);
    ok(&[
        "estimate", "--counts", p(&c), "--sampler", "amh", "--T", "10000", "--seed", "1", "--out", p(&rho),
        "--manifest", p(&manifest), "--truth", p(&truth),
    ]);
    let text = std::fs::read_to_string(&rho).unwrap();
    assert_eq!(text.lines().count(), 1 + 16);
    let m = io::load_matrix(&rho).unwrap();
    assert!((trace(&m).re - 1.0).abs() < 1e-10);

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(json["method"], "amh");
    assert_eq!(json["iterations"], 10000);
    assert_eq!(json["burn_in"], 1000);
    assert_eq!(json["lambda"], 500.0);
    assert!(json["tuning"]["beta_y"].as_f64().unwrap() > 0.0);
    assert_eq!(json["evaluations"], 10001);
    assert!(json["mse"].as_f64().unwrap() < 1e-2);
}

#[test]
fn estimate_accepts_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.csv");
    ok(&["simulate", "--n", "1", "--seed", "3", "--out", p(&c)]);
    for sampler in ["amh", "rmh", "li"] {
        let out = ok(&[
            "estimate", "--counts", p(&c), "--sampler", sampler, "--T", "200", "--beta-y", "0.1", "--beta-z", "0.1",
        ]);
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert_eq!(stdout.lines().count(), 1 + 4, "{sampler}");
    }
}

#[test]
fn true_state_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    ok(&["true-state", "--n", "2", "--state", "rank2", "--out", p(&t)]);
    let back = io::load_matrix(&t).unwrap();
    assert_eq!(mse(&back, true_state_rank2(2).unwrap().matrix()).unwrap(), 0.0);
}

#[test]
fn benchmark_emits_timing_table() {
    let out = ok(&["benchmark", "--n", "1,2", "--steps", "3"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let rows = qtomo::harness::read_timing_csv(stdout.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3].evals, 3 * 2 * 4);
}

#[test]
fn tune_prints_step_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.csv");
    ok(&["simulate", "--n", "2", "--seed", "1", "--out", p(&c)]);
    let out = ok(&["tune", "--counts", p(&c)]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("beta_y = "), "{stdout}");
    assert!(stdout.contains("beta_z = "));
}

#[test]
fn experiment_writes_manifest_and_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    ok(&[
        "experiment", "--n", "2", "--chains", "2", "--T", "300", "--beta-y", "0.1", "--beta-z", "0.05", "--seed", "3",
        "--out-dir", p(&out_dir),
    ]);
    let record = qtomo::harness::RunRecord::load(&out_dir.join("manifest.json")).unwrap();
    assert_eq!(record.chains.len(), 4);
    for name in ["truth.csv", "counts_000.csv", "counts_001.csv", "rho_amh_001.csv", "rho_rmh_000.csv", "rho_linear-inversion_000.csv"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(qtomo(&["simulate", "--bogus"]).status.code(), Some(2));
    assert_eq!(qtomo(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qtomo(&["estimate"]).status.code(), Some(2));
    assert_eq!(qtomo(&["estimate", "--help"]).status.code(), Some(0));
    let out = qtomo(&["estimate", "--counts", "/nonexistent/c.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert_eq!(qtomo(&["simulate", "--n", "0"]).status.code(), Some(1));
}
