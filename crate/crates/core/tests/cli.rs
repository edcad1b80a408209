//! The `riskcap` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn riskcap(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_riskcap"));
    cmd.args(args).env_remove("RISKCAP_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run_in(dir: &Path, sub: &str, cfg: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    riskcap(&args, &[])
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_writes_summary_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "solve", &config("m1.json"), &["--measure", "var", "--alpha", "0.01", "--zeta", "0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["regime"], "RISKLESS");
    assert_eq!(s["gamma"], 0.1);
    assert_eq!(s["conditions"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(csv.starts_with("t,y_1,v,weight,Q_t,risk_t,risk_ratio\n"));
    assert_eq!(csv.lines().count(), 514);
}

#[test]
fn table_round_trip_reproduces_the_cost() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "solve", &config("m3.json"), &["--measure", "es", "--zeta", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["regime"], "INTERIOR");
    let gap = (s["J"].as_f64().unwrap() - s["csv_roundtrip_J"].as_f64().unwrap()).abs();
    assert!(gap < 1e-8, "gap {gap}");
}

#[test]
fn no_measure_gives_the_base_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "solve", &config("m1.json"), &["--measure", "none"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["regime"], "unconstrained-base");
    assert!((s["J"].as_f64().unwrap() - -1.264_419_361_119_890_6).abs() < 1e-12);
}

#[test]
fn config_file_settings_and_market_paths_are_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "solve", &config("m1_es_run.json"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["measure"], "es");
    assert_eq!(s["zeta"], 0.5);
}

#[test]
fn singular_volatility_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"T":1.0,"d":2,"pieces":[{"t_start":0.0,"t_end":1.0,"r":0.05,"mu":[0.1,0.1],"sigma":[[0.2,0.4],[0.1,0.2]]}]}"#,
    )
    .unwrap();
    let out = run_in(dir.path(), "solve", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sigma not invertible"));
}

#[test]
fn bad_settings_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "solve", &config("m1.json"), &["--zeta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = dir.path().join("typo.json");
    fs::write(&cfg, r#"{"market":"m1.json","zetta":0.3}"#).unwrap();
    assert_eq!(run_in(dir.path(), "solve", &cfg, &[]).status.code(), Some(2));
    let out = riskcap(&["solve", "--config", config("m1.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[("RISKCAP_THREADS", "many")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn violated_hypotheses_exit_with_infeasible_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("m2_run.json");
    let out = run_in(dir.path(), "solve", &cfg, &["--alpha", "0.01"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("phi_monotone"));
}

#[test]
fn simulate_passes_on_a_riskless_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "simulate", &config("m1.json"), &["--zeta", "0.1", "--paths", "2000"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&dir.path().join("verify.json"))["all_pass"], true);
}

#[test]
fn simulate_reads_a_stored_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("m1.json");
    let flags = ["--measure", "es", "--zeta", "0.5"];
    assert_eq!(run_in(dir.path(), "solve", &cfg, &flags).status.code(), Some(0));
    let d = dir.path().to_str().unwrap();
    let mut extra = flags.to_vec();
    extra.extend(["--from", d, "--paths", "50000", "--dump-samples"]);
    let out = run_in(dir.path(), "simulate", &cfg, &extra);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&dir.path().join("verify.json"));
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["times"].as_array().unwrap().len(), 8);
    let samples = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1 + 50_000 * 8);
}

#[test]
fn simulate_rejects_too_few_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "simulate", &config("m1.json"), &["--paths", "50"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot resolve"));
}

#[test]
fn check_passes_and_detects_a_perturbed_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "check", &config("m1.json"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&dir.path().join("check.json"))["all_pass"], true);
    let out = run_in(dir.path(), "check", &config("m1.json"), &["--perturb-rho", "1e-4"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("check.json"));
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["var.root_residual", "es.root_residual"]);
}

#[test]
fn check_skips_theta_dependent_items_on_a_flat_market() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "check", &config("m0.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("check.json"));
    let skipped = report["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "skipped").count();
    assert_eq!(skipped, 8);
}

#[test]
fn outputs_are_bit_stable_across_runs_and_thread_counts() {
    let cfg = config("m3.json");
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap().to_owned();
        for sub in ["solve", "simulate"] {
            let out = riskcap(
                &[sub, "--config", cfg.to_str().unwrap(), "--out", &d, "--measure", "var", "--zeta", "0.5", "--paths", "20000"],
                &[("RISKCAP_THREADS", threads)],
            );
            assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        }
        files.push((
            fs::read(dir.path().join("solution.csv")).unwrap(),
            fs::read(dir.path().join("summary.json")).unwrap(),
            fs::read(dir.path().join("verify.json")).unwrap(),
        ));
    }
    assert!(files[0] == files[1]);
}
