use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fliplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fliplab")).args(args).env("FLIPLAB_THREADS", "1").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SQUARE: &str = r#"{"m":2,"columns":[{"label":null,"rows":[1,2]},{"label":null,"rows":[1,2]}]}"#;

#[test]
fn square_flip_graph_has_two_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "config.json", SQUARE);
    let out = dir.path().join("out");
    let o = fliplab(&["flipgraph", &cfg, "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g: Value = serde_json::from_slice(&std::fs::read(out.join("flipgraph.json")).unwrap()).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 2);
    assert_eq!(g["complete"], Value::Bool(true));
    assert!(std::fs::read_to_string(out.join("flipgraph.dot")).unwrap().contains("n0 -- n1"));
    let m: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "flipgraph");
    assert_eq!(m["prng"]["seed"], "1");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn flip_graph_budget_exhaustion_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "config.json", SQUARE);
    let o = fliplab(&["flipgraph", &cfg, "--seed", "1", "--budget", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "config.json", "{\"m\": 2, \"columns\": [");
    let o = fliplab(&["flipgraph", &cfg, "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn suite_typo_is_a_usage_error() {
    let o = fliplab(&["acceptance", "--suite", "smal"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid value"));
}

#[test]
fn seed_is_mandatory() {
    assert_eq!(code(&fliplab(&["certify-zono", "--N", "2"])), 2);
}

fn certify(dir: &Path, name: &str, args: &[&str]) -> (Output, String) {
    let out = dir.join(name);
    let mut full = vec!["certify-zono"];
    full.extend_from_slice(args);
    let out_s = out.display().to_string();
    full.extend_from_slice(&["--out", &out_s]);
    (fliplab(&full), out_s)
}

#[test]
fn same_seed_gives_identical_certificate_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, pa) = certify(dir.path(), "a.json", &["--N", "3", "--seed", "42"]);
    let (b, pb) = certify(dir.path(), "b.json", &["--N", "3", "--seed", "42"]);
    assert_eq!(code(&a), code(&b));
    assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
}

#[test]
fn identity_bits_fail_condition_a() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = certify(dir.path(), "id.json", &["--N", "1", "--identity"]);
    assert_eq!(code(&o), 1);
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["A"]["passed"], Value::Bool(false));
    assert!(summary["A"]["failures"].as_u64().unwrap() > 0);
    assert!(!summary["A"]["first"].as_array().unwrap().is_empty());
}

#[test]
fn exhausted_retries_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = certify(dir.path(), "r.json", &["--N", "1", "--seed", "1", "--retry", "3"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn verify_passing_tampered_and_truncated_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let (o, path) = certify(dir.path(), "c.json", &["--N", "48", "--seed", "1", "--retry", "100"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&fliplab(&["verify", &path])), 0);

    let mut v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let bits = v["g_bits"]["12"].as_str().unwrap().to_string();
    let flipped: String = bits.chars().enumerate().map(|(k, c)| if k == 48 { if c == '0' { '1' } else { '0' } } else { c }).collect();
    v["g_bits"]["12"] = Value::String(flipped);
    let tampered = write(dir.path(), "tampered.json", &v.to_string());
    let o = fliplab(&["verify", &tampered]);
    assert_eq!(code(&o), 1);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let mismatches = report["detail"]["report"]["mismatches"].as_array().unwrap();
    assert!(mismatches.contains(&Value::String("collection".into())), "{report}");

    v.as_object_mut().unwrap().remove("checks");
    let truncated = write(dir.path(), "truncated.json", &v.to_string());
    assert_eq!(code(&fliplab(&["verify", &truncated])), 2);
}

#[test]
fn build_instance_reports_column_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("instance.json");
    let o = fliplab(&["build-instance", "--N", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert_eq!(v["n"], 1040);
    assert_eq!(v["blocks"].as_array().unwrap().len(), 60);
}

#[test]
fn extend_a_small_triangulation() {
    let dir = tempfile::tempdir().unwrap();
    // Δ² × Δ¹ restricted to two rows per column: rows {1,2} and {2,3}.
    let cfg = write(dir.path(), "pi.json", r#"{"m":3,"columns":[{"label":null,"rows":[1,2]},{"label":null,"rows":[2,3]}]}"#);
    let t = write(dir.path(), "t.jsonl", "{\"config\":null,\"count\":1}\n[[1,0],[2,0],[2,1],[3,1]]\n");
    let out = dir.path().join("ext");
    let o = fliplab(&["extend", "--config", &cfg, "--triangulation", &t, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["simplices"], 3);
}

#[test]
fn audit_of_a_random_small_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = certify(dir.path(), "c2.json", &["--N", "2", "--seed", "5"]);
    let out = dir.path().join("audit");
    let o = fliplab(&["audit", &path, "--out", out.to_str().unwrap()]);
    // The ensemble core of a random N = 2 assignment is empty, so nothing can escape.
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(v["audit"]["escaping"], 0);
}

#[test]
fn ensemble_retries_exhausted_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = fliplab(&["check-ensemble2", "--N", "1", "--seed", "1", "--retry", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn ensemble_at_48_checks_and_reverifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = fliplab(&["check-ensemble2", "--N", "48", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ensemble = dir.path().join("ensemble.json");
    let o = fliplab(&["verify", ensemble.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["detail"]["ensemble2"]["passed"], Value::Bool(true));
}
