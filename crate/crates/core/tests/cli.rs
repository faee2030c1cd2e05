//! End-to-end runs of the `mglab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mglab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mglab"))
        .args(args)
        .env("MGLAB_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = mglab(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mglab(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn canonical_example_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = mglab(
        dir.path(),
        &["gradient-bound", "canonical", "--delta", "0.5", "--gamma-star", "1", "--m", "3", "--kbar0", "1", "--R", "10"],
    );
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&dir.path().join("gradient-bound-canonical.json"));
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc, stdout);
    let p = &doc["report"]["outputs"]["params"];
    let q = 1.0 / (4.0 * 2f64.sqrt());
    assert!((p["q"].as_f64().unwrap() - q).abs() < 1e-12);
    assert!((p["a0"].as_f64().unwrap() - 8.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((p["L"].as_f64().unwrap() - 204.8).abs() < 1e-9);
    assert_eq!(doc["report"]["tool"]["version"], env!("CARGO_PKG_VERSION"));
    assert!(doc["report"]["anchor"].as_str().is_some_and(|s| !s.is_empty()));
    assert!(doc["metadata"]["wall_time_seconds"].is_number());
}

#[test]
fn config_merges_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"command": "gradient-bound canonical", "params": {"delta": 0.5, "gamma-star": 1, "m": 3, "R": 20}}"#,
    );
    let out = dir.path().join("r.json").display().to_string();
    let o = mglab(dir.path(), &["--config", &cfg, "gradient-bound", "canonical", "--R", "10", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(Path::new(&out));
    assert_eq!(doc["report"]["inputs"]["R"], 10.0);
    assert!((doc["report"]["outputs"]["params"]["L"].as_f64().unwrap() - 204.8).abs() < 1e-9);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\n  \"params\": {\"delta\": 0.5,}\n}");
    let o = mglab(dir.path(), &["--config", &bad, "gradient-bound", "canonical"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("column"), "{err}");

    let unknown = write(dir.path(), "unknown.json", r#"{"flavour": 1}"#);
    assert_eq!(mglab(dir.path(), &["--config", &unknown, "suite", "--quick"]).status.code(), Some(1));

    let unused = write(dir.path(), "unused.json", r#"{"params": {"delta": 0.5, "gamma-star": 1, "m": 3, "R": 10, "zeta": 2}}"#);
    assert_eq!(mglab(dir.path(), &["--config", &unused, "gradient-bound", "canonical"]).status.code(), Some(1));

    let o = mglab(dir.path(), &["--config", "/nonexistent/cfg.json", "suite"]);
    assert_eq!(o.status.code(), Some(1));
    let man = write(dir.path(), "e2.json", r#"{"kind":"rotsym","m":2,"eta":{"type":"euclidean"}}"#);
    let o = mglab(dir.path(), &["gradient-bound", "verify", "--manifold", &man, "--graph", "/nonexistent.csv", "--R", "1", "--m", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // a small c3' forces the γ fallback out of its band
    let o = mglab(dir.path(), &["heat", "appendix-constants", "--c3p", "1", "--c4p", "1", "--m", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let doc = read_json(&dir.path().join("heat-appendix-constants.json"));
    assert_eq!(doc["report"]["passed"], false);
}

#[test]
fn radial_graph_round_trip_through_verify_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let man = write(dir.path(), "e2.json", r#"{"kind":"rotsym","m":2,"eta":{"type":"euclidean"}}"#);
    let out = dir.path().join("cat.json").display().to_string();
    let o = mglab(dir.path(), &["solve-radial", "--manifold", &man, "--flux", "1", "--r0", "1.05", "--r1", "5", "--n", "513", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let csv = dir.path().join("cat.graph.csv");
    let header = std::fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("r,u,du,W,residual"));
    let csv = csv.display().to_string();
    let o = mglab(dir.path(), &["gradient-bound", "verify", "--manifold", &man, "--graph", &csv, "--center", "3", "--R", "1.5", "--R1", "0.75", "--m", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = mglab(dir.path(), &["compare-ode", "--h", "zero", "--manifold", &man, "--graph", &csv]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&dir.path().join("compare-ode.json"));
    assert_eq!(doc["report"]["outputs"]["graph_comparison"]["passed"], true);
    assert!(dir.path().join("compare-ode.profile.csv").is_file());
}

#[test]
fn certificate_round_trip_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, extra: &[&str]| {
        let out = dir.path().join(format!("cert-{tag}.json")).display().to_string();
        let mut args = vec!["certify-counterexample", "--b", "237137.37", "--c", "10", "--n", "2048", "--out", &out];
        args.extend_from_slice(extra);
        let o = mglab(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0));
        out
    };
    let a = run("a", &[]);
    let b = run("b", &["--sequential"]);
    let outputs = |p: &str| read_json(Path::new(p))["report"]["outputs"].clone();
    assert_eq!(outputs(&a), outputs(&b));
    let o = mglab(dir.path(), &["gradient-bound", "verify", "--certificate", &a, "--R", "10", "--R1", "5", "--m", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn optimizer_reports_are_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let report = |tag: &str| {
        let out = dir.path().join(format!("opt-{tag}.json")).display().to_string();
        let o = mglab(dir.path(), &["gradient-bound", "optimize", "--m", "2", "--R", "10", "--R1", "5", "--r", "1", "--gamma", "0.5", "--seed", "7", "--out", &out]);
        assert_eq!(o.status.code(), Some(0));
        serde_json::to_string(&read_json(Path::new(&out))["report"]).unwrap()
    };
    let first = report("a");
    assert_eq!(first, report("b"));
    assert!(first.contains("\"seed\":7"));
}

#[test]
fn heat_commands_pass_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["heat", "kernel"],
        vec!["heat", "meanvalue", "--profile", "two-plus-inverse", "--r-max", "120", "--n", "1200"],
        vec!["heat", "lap-average"],
    ] {
        let o = mglab(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let k = read_json(&dir.path().join("heat-kernel.json"));
    assert!(k["report"]["outputs"]["euclidean_relative_error"].as_f64().unwrap() < 1e-2);
    assert!(dir.path().join("heat-kernel.mass.csv").is_file());
}
