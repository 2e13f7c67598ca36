//! End-to-end runs of the `oubl` binary: exit codes, outputs and config
//! handling.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn oubl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oubl")).args(args).env_remove("OUBL_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const BRIDGE: &str = r#"{"alpha":1,"T":1}"#;

#[test]
fn verify_exit_codes() {
    let ok = oubl(&["verify", "--family", "alpha-wiener", "--params", BRIDGE]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let report: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["result"]["representable"], true);

    let za = oubl(&["verify", "--family", "zero-area"]);
    assert_eq!(code(&za), 2);
    assert!(stderr(&za).contains("witness"));
    let report: Value = serde_json::from_slice(&za.stdout).unwrap();
    assert_eq!(report["result"]["separability_verdict"], "fail_negative_correlation");

    assert_eq!(code(&oubl(&["verify", "--family", "glued"])), 2);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&oubl(&["verify", "--bogus"])), 64);
    assert_eq!(code(&oubl(&["verify", "--family", "nope"])), 64);
    assert_eq!(code(&oubl(&["verify", "--family", "alpha-wiener", "--params", "{not json"])), 64);
    assert_eq!(code(&oubl(&["verify"])), 64);
    assert_eq!(code(&oubl(&["suploc", "--grid", "5"])), 64);
    assert_eq!(code(&oubl(&["families", "--threads", "0"])), 64);
    assert_eq!(code(&oubl(&[])), 64);
    assert_eq!(code(&oubl(&["--version"])), 0);
}

#[test]
fn config_file_merges_under_flags_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "reduce", "family": "alpha-wiener", "params": {"alpha": 1, "T": 1},
        "interval": [0.25, 0.75], "grid": 3}"#)
    .unwrap();
    let out_dir = dir.path().join("out");
    let run = oubl(&["reduce", "--config", cfg.to_str().unwrap(), "--grid", "0.5", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let res = read_json(&out_dir.join("reduce.json"));
    assert_eq!(res["result"]["points"].as_array().unwrap().len(), 1);
    let lo = res["result"]["ou_interval"][0].as_f64().unwrap();
    assert!((lo - (1.0f64 / 3.0).ln()).abs() < 1e-15);
    let saved = read_json(&out_dir.join("config.json"));
    assert_eq!(saved["interval"], serde_json::json!([0.25, 0.75]));
    assert_eq!(saved["grid"], serde_json::json!([0.5]));

    std::fs::write(&cfg, r#"{"command": "reduce", "intervall": [0.25, 0.75]}"#).unwrap();
    assert_eq!(code(&oubl(&["reduce", "--config", cfg.to_str().unwrap()])), 64);
    std::fs::write(&cfg, r#"{"command": "verify"}"#).unwrap();
    assert_eq!(code(&oubl(&["reduce", "--config", cfg.to_str().unwrap()])), 64);
}

#[test]
fn suploc_grid_is_symmetric() {
    let out = oubl(&["suploc", "--T", "1", "--grid", "101"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 101);
    for i in 0..rows.len() {
        let j = rows.len() - 1 - i;
        assert!((rows[i][0] + rows[j][0] - 1.0).abs() < 1e-15);
        assert!((rows[i][1] - rows[j][1]).abs() < 1e-6, "row {i}");
    }
}

#[test]
fn suploc_pullback_for_a_family_interval() {
    let out = oubl(&["suploc", "--family", "alpha-wiener", "--params", BRIDGE, "--interval", "0.25", "0.75", "--grid", "7"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,f,ou_density,residual\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 7);
    assert!((rows[0][1] - rows[6][1]).abs() < 1e-8);
}

#[test]
fn suploc_monte_carlo_check_within_budget() {
    let out = oubl(&["suploc", "--T", "1", "--grid", "5", "--mc-check", "100000"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("s,f,residual,mc_cdf,mc_stderr,quad_cdf,mc_budget\n"));
    for r in csv_rows(&text) {
        assert!((r[3] - r[5]).abs() <= r[6], "{r:?}");
    }
}

#[test]
fn strict_mode_reports_flagged_points() {
    let args = ["suploc", "--T", "1", "--grid", "3", "--residual-tol", "1e-300"];
    assert_eq!(code(&oubl(&args)), 0);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&oubl(&strict)), 3);
}

#[test]
fn compare_routes_agree() {
    for (family, params) in [
        ("alpha-wiener", BRIDGE),
        ("weighted", r#"{"w":"1+t","bridge":true}"#),
        ("alpha-wiener", r#"{"alpha":0.25,"T":1}"#),
    ] {
        let out = oubl(&["compare", "--family", family, "--params", params, "--paths", "20000", "--seed", "3"]);
        assert_eq!(code(&out), 0, "{family} {params}: {}", stderr(&out));
    }
}

#[test]
fn boundedness_reports_the_limit() {
    let out = oubl(&["boundedness", "--family", "alpha-wiener", "--params", r#"{"alpha":2,"T":1}"#]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let limit = v["result"]["record"]["limit_estimate"].as_f64().unwrap();
    assert!((limit - 3f64.powf(-2.0 / 3.0)).abs() < 1e-4);
    assert_eq!(code(&oubl(&["boundedness", "--family", "zero-area"])), 64);
}

#[test]
fn reruns_are_byte_identical_apart_from_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let snapshot = || {
        let args = ["simulate", "--family", "ou-bridge", "--params", r#"{"q":1,"sigma":1,"a":0,"b":1,"T":2}"#,
            "--paths", "500", "--seed", "11", "--out", out.to_str().unwrap()];
        assert_eq!(code(&oubl(&args)), 0);
        let mut v = read_json(&out.join("simulate.json"));
        assert!(v.as_object_mut().unwrap().remove("timestamp").is_some());
        (std::fs::read(out.join("paths.csv")).unwrap(), v)
    };
    let first = snapshot();
    let second = snapshot();
    assert!(first == second);
}

#[test]
fn families_lists_every_key() {
    let out = oubl(&["families"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&str> = v["result"].as_array().unwrap().iter().map(|f| f["key"].as_str().unwrap()).collect();
    assert_eq!(keys, oubridge::families::FAMILY_KEYS);
}
