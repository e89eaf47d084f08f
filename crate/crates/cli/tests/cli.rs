use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const FINITE_TYPE: &str = r#"{"n": 2, "coefficients": [[], [{"freq": [1, 0], "re": "1/2"}, {"freq": [-1, 0], "re": "1/2"}]]}"#;
const ALL_ZERO: &str = r#"{"n": 1, "coefficients": [[]]}"#;
const SQRT2: &str = r#"{"n": 1, "coefficients": [[]], "constants": [{"tag": "quad", "a": "0", "b": "1", "d": 2}]}"#;

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).expect("fixture written");
    p
}

fn hypoell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypoell")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn verdict<'a>(doc: &'a Value, property: &str) -> &'a Value {
    doc["verdicts"].as_array().unwrap().iter().find(|v| v["property"] == property).expect("property present")
}

#[test]
fn classify_finite_type_system_exits_zero() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "ft.json", FINITE_TYPE);
    let out = hypoell(&["classify", path(&sys)]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    let gh = verdict(&doc, "GH(X)");
    assert_eq!(gh["status"], "Holds");
    let tags: Vec<&str> = gh["reasons"].as_array().unwrap().iter().map(|r| r["tag"].as_str().unwrap()).collect();
    assert!(tags.contains(&"finite-type-point-implies-gh"), "{tags:?}");
    // every referenced certificate hash is embedded
    for r in gh["reasons"].as_array().unwrap() {
        if let Some(h) = r["certificate"].as_str() {
            assert!(doc["certificates"].get(h).is_some(), "missing certificate {h}");
        }
    }
}

#[test]
fn classify_all_zero_system_exits_one_with_resonance_certificate() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "zero.json", ALL_ZERO);
    let out = hypoell(&["classify", path(&sys)]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    let gh = verdict(&doc, "GH(X0)");
    assert_eq!(gh["status"], "Fails");
    let hash = gh["reasons"][0]["certificate"].as_str().unwrap();
    let cert = &doc["certificates"][hash]["Diophantine"];
    assert_eq!(cert["status"], "SA");
    // tau + 0 * xi vanishes exactly at every witness entry
    for e in cert["certificate"]["Witness"]["entries"].as_array().unwrap() {
        assert_eq!(e["tau"], serde_json::json!(["0"]));
    }
    assert_eq!(verdict(&doc, "GS(X)")["status"], "Holds");
}

#[test]
fn malformed_input_and_bad_flags_exit_three() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"n": 1,"#);
    let out = hypoell(&["classify", path(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());

    let sys = write(&dir, "sqrt2.json", SQRT2);
    assert_eq!(hypoell(&["classify", path(&sys), "--xi-max", "1"]).status.code(), Some(3));
    assert_eq!(hypoell(&["classify", path(&sys), "--format", "xml"]).status.code(), Some(3));
    assert_eq!(hypoell(&["classify", "/nonexistent/system.json"]).status.code(), Some(3));
    assert_eq!(hypoell(&["microlocal", "--symbol", "nope"]).status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_hypoell"))
        .args(["classify", path(&sys)])
        .env("HYPOELL_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reports_are_byte_stable_across_runs_and_worker_counts() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "ft.json", FINITE_TYPE);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(hypoell(&["classify", path(&sys), "--out", path(&a)]).status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_hypoell"))
        .args(["classify", path(&sys), "--out", path(&b)])
        .env("HYPOELL_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let s = write(&dir, "sqrt2.json", SQRT2);
    let run = |seed: &str| hypoell(&["solve", path(&s), "--t-window", "8", "--seed", seed]).stdout;
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
}

#[test]
fn scan_and_csv_output() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sqrt2.json", SQRT2);
    let out = hypoell(&["scan", path(&sys), "--xi-max", "64", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "xi,m_lo,m_hi,m");
    assert_eq!(lines.len(), 65);
    // m(1) = sqrt(2) - 1
    let m1: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!((m1 - (2f64.sqrt() - 1.0)).abs() < 1e-15);

    let zero = write(&dir, "zero.json", ALL_ZERO);
    assert_eq!(hypoell(&["scan", path(&zero)]).status.code(), Some(1));
    let ft = write(&dir, "ft.json", FINITE_TYPE);
    assert_eq!(hypoell(&["scan", path(&ft)]).status.code(), Some(3));
}

#[test]
fn solve_recovers_smooth_solution_for_sqrt2() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sqrt2.json", SQRT2);
    let out = hypoell(&["solve", path(&sys), "--t-window", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["verdict"]["status"], "Holds");
    assert!(doc["obstructions"].as_array().unwrap().is_empty());
    assert!(doc["decay"]["verdict"].get("RapidDecay").is_some());
    assert!(doc["verdict"]["max_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn counterexample_confirms_failure() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("ce.json");
    let out = hypoell(&["counterexample", "--n", "1", "--base", "2", "--depth", "3", "--out", path(&out_path)]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["gh_fails_confirmed"], true);
    assert!(doc["report"]["p_decay"]["verdict"].get("RapidDecay").is_some());
    assert_eq!(hypoell(&["counterexample", "--depth", "2"]).status.code(), Some(3));
}

#[test]
fn decay_of_field_files() {
    let dir = TempDir::new().unwrap();
    let mut smooth = Vec::new();
    let mut rough = Vec::new();
    for xi in -32i64..=32 {
        smooth.push(serde_json::json!({"xi": xi, "coeffs": [{"tau": [0], "re": (-(xi * xi) as f64 / 6.4).exp(), "im": 0.0}]}));
        rough.push(serde_json::json!({"xi": xi, "coeffs": [{"tau": [0], "re": 1.0, "im": 0.0}]}));
    }
    let field = |xi: Vec<Value>| serde_json::json!({"n": 1, "xi_window": 32, "t_window": 32, "xi": xi}).to_string();
    let s = write(&dir, "smooth.json", &field(smooth));
    let r = write(&dir, "rough.json", &field(rough));
    assert_eq!(hypoell(&["decay", path(&s)]).status.code(), Some(0));
    assert_eq!(hypoell(&["decay", path(&r)]).status.code(), Some(1));
    assert_eq!(hypoell(&["decay", path(&s), "--at", "0.5"]).status.code(), Some(0));
    assert_eq!(hypoell(&["decay", path(&s), "--at", "0.5,1.0"]).status.code(), Some(3));

    // the rough field is singular along +-xi only; the Laplacian adds nothing
    let sys = write(&dir, "sqrt2.json", SQRT2);
    let out = hypoell(&["microlocal", "--symbol", "laplacian", "--field", path(&r), "--system", path(&sys)]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let sing = doc["singular_directions"]["singular"].as_array().unwrap();
    assert_eq!(sing.len(), 2);
    for d in sing {
        assert!(d[0].as_f64().unwrap().abs() < 1e-12 && (d[1].as_f64().unwrap().abs() - 1.0).abs() < 1e-12);
    }
    assert!(doc["new_directions"].as_array().unwrap().is_empty());
    assert_eq!(doc["t_elliptic_cone"]["c"], 1.0);
}

#[test]
fn exponential_symbol_is_rejected() {
    let out = hypoell(&["microlocal", "--symbol", "exp", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["class"]["in_class"], false);
    assert_eq!(hypoell(&["microlocal", "--symbol", "bessel:2", "--n", "2"]).status.code(), Some(0));
}
