use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eprb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eprb")).args(args).output().expect("binary runs")
}

fn result(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).expect("JSON output");
    assert_eq!(v["tool"], "eprb");
    v["result"].clone()
}

fn instance(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn classify_minimal() {
    let dir = tempfile::tempdir().unwrap();
    let file = instance(dir.path(), "m.json", r#"{"type":"minimal"}"#);
    let r = result(&eprb(&["classify", &file]));
    assert_eq!(r["kind"], "minimal");
    assert_eq!(r["correlations"], serde_json::json!(["0", "0", "0", "0"]));
    assert_eq!(r["chsh"]["satisfied"], true);
    for cond in ["fc", "rci", "roi", "lc"] {
        assert_eq!(r["locality"][cond]["flag"], "holds", "{cond}");
    }
    assert_eq!(r["bell_real"]["achievable"], true);
}

#[test]
fn classify_qm_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let file = instance(
        dir.path(),
        "q.json",
        r#"{"type":"qm","params":{"theta2":22.5,"theta3":22.5,"theta4":22.5}}"#,
    );
    let r = result(&eprb(&["classify", &file]));
    assert_eq!(r["arithmetic"], "float");
    assert_eq!(r["chsh"]["satisfied"], false);
    assert_eq!(r["chsh"]["first_violation"]["k"], 1);
    assert_eq!(r["bell_real"]["achievable"], false);
    assert_eq!(r["qm"]["achievable"], true);
    let s1 = r["s"][0].as_f64().unwrap();
    assert!((s1 - 2.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn fine_feasible_and_infeasible() {
    let r = result(&eprb(&["fine", "0", "1", "-1", "0"]));
    assert_eq!(r["round_trip_error"], 0.0);
    let out = eprb(&["fine", "0", "1", "1", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn slice_bell_real_middle() {
    let r = result(&eprb(&["slice", "--model", "bellreal", "--w", "0"]));
    assert_eq!(r["kind"], "polytope");
    assert_eq!(r["vertices"].as_array().unwrap().len(), 12);
    assert_eq!(r["faces"].as_array().unwrap().len(), 14);
}

#[test]
fn slice_csv_has_header() {
    let out = eprb(&["slice", "--model", "cube", "--w", "1/3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("w,x,y,z,label"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn simulate_minimal_fits() {
    let r = result(&eprb(&["simulate", "--preset", "minimal", "--trials", "16000", "--seed", "1"]));
    assert!(r["goodness_of_fit"]["p_value"].as_f64().unwrap() > 1e-6);
    assert_eq!(r["estimate"]["trials"], 16000);
}

#[test]
fn simulate_qm_maximum_and_reestimate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trials.csv").display().to_string();
    let r = result(&eprb(&[
        "simulate", "--preset", "qm-max", "--trials", "1000000", "--seed", "7", "--records", &csv,
    ]));
    let s1 = r["estimate"]["s"][0].as_f64().unwrap();
    assert!((2.818..=2.838).contains(&s1), "{s1}");
    assert_eq!(r["estimate"]["chsh_violations"], serde_json::json!([1]));
    let again = result(&eprb(&["estimate", &csv]));
    assert_eq!(again["estimate"]["s"], r["estimate"]["s"]);
}

#[test]
fn verify_is_exact() {
    let r = result(&eprb(&["verify"]));
    assert_eq!(r["crm_identity_max_deviation"], "0");
    assert_eq!(r["ok"], true);
}

#[test]
fn truth_table_rows() {
    let r = result(&eprb(&["truth-table"]));
    assert_eq!(r.as_array().unwrap().len(), 8);
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = instance(dir.path(), "b.json", r#"{"type":"generic","params":{"gamma":[1]}}"#);
    for args in [
        vec!["classify", bad.as_str()],
        vec!["classify", "/nonexistent/file.json"],
        vec!["fine", "0", "x", "0", "0"],
        vec!["fine", "2", "0", "0", "0"],
        vec!["slice", "--model", "sphere", "--w", "0"],
        vec!["census", "--format", "csv"],
    ] {
        assert_eq!(eprb(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.json");
    let out = eprb(&["verify", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["command"], "verify");
}
