use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn srw08(dir: &Path) -> PathBuf {
    write(dir, "srw08.json", r#"{"family": "lattice_pmf", "atoms": [[1.0, 0.8], [-1.0, 0.2]]}"#)
}

fn fpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpt")).args(args).env_remove("FPT_DEFAULT_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_reports_boundary_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let dist = srw08(dir.path());
    let out = fpt(&["analyze", "--dist", dist.to_str().unwrap(), "--a", "0.223144"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let verdicts: Vec<&str> = doc["result"]["classifications"][0]["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["verdict"].as_str().unwrap())
        .collect();
    assert_eq!(verdicts, ["Finite", "Finite", "Infinite"]);
    assert_eq!(doc["tool"], "fpt");
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn infinite_moment_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let dist = srw08(dir.path());
    let r = (-(0.8f64.ln())).to_string();
    let out = fpt(&["simulate", "--dist", dist.to_str().unwrap(), "--a", &r, "--quantity", "rho", "--paths", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "infinite_moment");
    assert_eq!(json(&out)["error"]["reason"], "at_critical_interior");
}

#[test]
fn divergent_series_is_reported_not_refused() {
    let dir = tempfile::tempdir().unwrap();
    let dist = srw08(dir.path());
    let r = (-(0.8f64.ln())).to_string();
    let out = fpt(&["series", "--dist", dist.to_str().unwrap(), "--a", &r, "--which", "V"]);
    assert_eq!(out.status.code(), Some(0));
    let res = &json(&out)["result"];
    assert_eq!(res["diverged"], true);
    assert!(res["value"].is_null());
}

#[test]
fn malformed_spec_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let dist = write(dir.path(), "bad.json", r#"{"family": "lattice_pmf", "atoms": [[1.0, 0.7], [-1.0, 0.2]]}"#);
    let out = fpt(&["analyze", "--dist", dist.to_str().unwrap(), "--a", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(doc["error"]["kind"], "invalid_spec");
    assert!(doc["error"]["invariant"].as_str().is_some_and(|s| !s.is_empty()));
    assert!(doc["config"]["dist"].is_string());
}

#[test]
fn bad_flags_exit_one() {
    let out = fpt(&["simulate", "--quantity", "tau"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "invalid_argument");
}

#[test]
fn seed_falls_back_to_environment_and_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let dist = srw08(dir.path());
    let args = ["simulate", "--dist", dist.to_str().unwrap(), "--a", "0.1", "--quantity", "tau", "--paths", "2000"];
    let with_env =
        Command::new(env!("CARGO_BIN_EXE_fpt")).args(args).env("FPT_DEFAULT_SEED", "42").output().unwrap();
    let cfg = &json(&with_env)["config"];
    assert_eq!(cfg["seed"], 42);
    assert_eq!(cfg["seed_source"], "env");

    let mut flagged = args.to_vec();
    flagged.extend(["--seed", "42"]);
    let out = fpt(&flagged);
    assert_eq!(json(&out)["result"], json(&with_env)["result"]);
    assert_eq!(json(&out)["config"]["seed_source"], "flag");

    assert_eq!(json(&fpt(&args))["config"]["seed_source"], "default");
}

#[test]
fn skip_free_table_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let dist = srw08(dir.path());
    let out_path = dir.path().join("table.csv");
    let out = fpt(&[
        "asymptote",
        "--dist",
        dist.to_str().unwrap(),
        "--a",
        "0.1",
        "--quantity",
        "tau",
        "--table",
        "0:30:1",
        "--format",
        "csv",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# fpt "));
    assert_eq!(lines.next().unwrap(), "x,scaled_moment,constant,rel_gap");
    let gaps: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(gaps.len(), 31);
    assert!(gaps.iter().all(|g| *g <= 1e-9));
}
