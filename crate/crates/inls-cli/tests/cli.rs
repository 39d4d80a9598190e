use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use inls::grid::{self, RadialProfile};
use serde_json::Value;

const PARAMS: [&str; 8] = ["--N", "3", "--b", "1", "--q", "3.5", "--p", "3"];

fn inls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inls")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn with_params<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&PARAMS);
    v.extend_from_slice(extra);
    v
}

#[test]
fn classify_reference_pair() {
    let out = inls(&with_params("classify", &["--eta", "1.5", "--r", "2.75"]));
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["regime"], "Scaled");
    assert_eq!(v["admissible"], true);
    let out = inls(&with_params("classify", &["--eta", "1.3333333333333333", "--r", "3"]));
    assert_eq!(json(&out)["regime"], "Scaled");
}

#[test]
fn invalid_parameters_exit_two() {
    let out = inls(&["classify", "--N", "3", "--b", "2.5", "--q", "3.5", "--p", "3", "--eta", "1", "--r", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "HYPOTHESIS_VIOLATION");
    assert!(out.stdout.is_empty());
    let usage = inls(&["eigen", "--N", "3"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(inls(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_three() {
    let out = inls(&with_params("eigen", &["--max-iters", "2"]));
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "DIVERGED");
}

#[test]
fn zero_profile_verifies_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let g = Arc::new(grid::make_grid(1e-3, 1e3, 65, 3).unwrap());
    let path = dir.path().join("zero.csv");
    std::fs::write(&path, grid::profile_csv(&RadialProfile::zeros(g), "zero", serde_json::json!({}))).unwrap();
    let out = inls(&with_params("verify", &["--profile", path.to_str().unwrap(), "--term", "2:1.5:2.5", "--term", "-1:0:4", "--lambda", "3"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    for key in ["I", "J", "phi", "grad_norm", "el_res", "pohozaev_res", "eigen_rel_res"] {
        assert_eq!(num(&v[key]), 0.0, "{}", key);
    }
    assert!(v["rayleigh"].is_null());
}

#[test]
fn eigen_then_verify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = inls(&with_params("eigen", &["--init", "bump", "--out", out_dir]));
    assert!(out.status.success());
    let rep = json(&out);
    assert_eq!(rep["converged"], true);
    let lambda = num(&rep["value"]);
    let profile = rep["profile_path"].as_str().unwrap().to_string();
    assert!(Path::new(&profile).exists());
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("eigen_report.json")).unwrap()).unwrap();
    assert_eq!(stored, rep);

    let lam = format!("{:e}", lambda);
    let check = inls(&with_params("verify", &["--profile", &profile, "--lambda", &lam]));
    assert!(check.status.success());
    let v = json(&check);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    assert!(close(num(&v["el_res"]), num(&rep["el_res"])));
    assert!(close(num(&v["pohozaev_res"]), num(&rep["pohozaev_res"])));
    assert!(close(num(&v["rayleigh"]), lambda));
}

#[test]
fn minimize_writes_negative_level() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["minimize", "--N", "3", "--b", "0.5", "--q", "2.5", "--p", "2.25", "--term", "1:1.5:2.1", "--out", dir.path().to_str().unwrap()];
    let out = inls(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(num(&v["value"]) < 0.0);
    assert!(dir.path().join("minimize_profile.csv").exists());
    let refused = inls(&with_params("minimize", &["--eta", "1.5", "--r", "2.25"]));
    assert_eq!(refused.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&refused.stderr).unwrap();
    assert_eq!(err["error"], "NOT_COERCIVE_CONFIG");
}

#[test]
fn thresholds_and_region_map() {
    let out = inls(&["thresholds", "--N", "3", "--eta1", "1", "--S1", "1", "--mu", "0"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((num(&v["c_star"]) - 0.25).abs() <= 1e-15);
    assert!((num(&v["tilde_s"]) - 1.0).abs() <= 1e-15);

    let map = inls(&with_params("region-map", &["--eta-n", "3", "--r-n", "4"]));
    assert!(map.status.success());
    let text = String::from_utf8(map.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 12);
}

#[test]
fn numbers_carry_seventeen_digits() {
    let out = inls(&["thresholds", "--N", "4", "--eta1", "0.5", "--S1", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let raw = text.split("\"c_star\":").nth(1).unwrap().split(',').next().unwrap();
    let mantissa = raw.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{}", raw);
    assert!(num(&v["c_star"]) > 0.0);
}

#[test]
fn runs_are_repeatable() {
    let a = inls(&with_params("eigen", &["--M", "257", "--seed", "3"]));
    let b = inls(&with_params("eigen", &["--M", "257", "--seed", "3"]));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
