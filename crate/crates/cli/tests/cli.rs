//! Golden tests of the `qrp` binary: exit codes, report schemas and
//! reproducibility.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn qrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrp")).args(args).output().unwrap()
}

fn qrp_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qrp"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn list_prints_the_sorted_catalog() {
    let o = qrp(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("thm31.integral"));
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(ids.len(), qrp_core::identities::catalog().len());
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn verify_json_run_passes_with_exit_zero() {
    let o = qrp(&["verify", "--ids", "all", "--seeds", "0..4", "--m", "1,2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(rows.len() > 200);
    for r in &rows {
        let keys: Vec<&str> = r.as_object().unwrap().keys().map(|k| k.as_str()).filter(|&k| k != "reason").collect();
        assert_eq!(keys, ["M", "id", "pass", "q", "rel_error", "seed", "wall_ms"], "{r}");
        assert_eq!(r["wall_ms"], 0.0);
        assert!(r["M"].as_u64().unwrap() <= 2);
    }
}

#[test]
fn unknown_id_is_a_configuration_error() {
    let o = qrp(&["verify", "--ids", "nosuch.id"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nosuch.id"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn malformed_flags_report_a_position() {
    let o = qrp(&["verify", "--q", "0.5,x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("position 4"), "{}", stderr(&o));
    let o = qrp(&["verify", "--seeds", "3..z"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("position 3"));
    let o = qrp(&["verify", "--q", "1.2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qrp(&["verify", "--format", "yaml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn q_near_one_fails_with_a_recorded_reason() {
    let o = qrp(&["verify", "--ids", "qrp.system", "--q", "0.99,0", "--seeds", "0..2", "--m", "1", "--format", "json"]);
    let code = o.status.code().unwrap();
    assert!(code == 1 || code == 2);
    if code == 1 {
        let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
        assert!(rows.iter().all(|r| r["pass"] == false && r["rel_error"].is_null()));
        assert!(rows.iter().all(|r| r["reason"].as_str().unwrap().contains("no convergence")));
    }
}

#[test]
fn failing_checks_exit_one() {
    let o = qrp(&["verify", "--ids", "W.integral", "--seeds", "0..2", "--m", "1", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("0 pass / 2 fail"));
}

#[test]
fn reports_written_to_a_file_are_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let o = qrp(&["verify", "--ids", "degene.*,qal.andrews", "--seeds", "0..3", "--format", "csv", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).is_empty());
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.starts_with("id,seed,M,q_re,q_im,rel_error,pass,reason,wall_ms\n"));
}

#[test]
fn timing_fills_wall_time() {
    let o = qrp(&["verify", "--ids", "thm31.integral", "--seeds", "0", "--m", "3", "--format", "json", "--timing"]);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(rows[0]["wall_ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn eval_q_binomial() {
    let o = qrp_stdin(&["eval", "rphis", "-", "--format", "json"], r#"{"upper": [0.3], "lower": [], "z": 0.4}"#);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let k = qrp_core::QContext::default();
    let want = qrp_core::qcore::pinf(&[qrp_core::C64::new(0.12, 0.0)], &k) / qrp_core::qcore::pinf(&[qrp_core::C64::new(0.4, 0.0)], &k);
    assert!((v["value"][0].as_f64().unwrap() - want.re).abs() < 1e-14);
    assert_eq!(v["converged"], true);
}

#[test]
fn eval_equal_endpoints_prints_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    std::fs::write(&path, r#"{"a": [[0.5, 0.1], 0.6, 0.7, 0.8], "b": [1, 1, 1, 0.3], "i": 2, "j": 2}"#).unwrap();
    let o = qrp(&["eval", "rp_integral", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("value      0 + 0i"), "{}", stdout(&o));
}

#[test]
fn eval_schema_errors_exit_two_and_name_the_field() {
    let o = qrp_stdin(&["eval", "W_normalized", "-"], r#"{"b": [1, 1, 1, 1]}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`a`"));
    let o = qrp_stdin(&["eval", "kajihara_W", "-"], r#"{"x": [0.3], "a": 0.2, "u": [0.1, "p"], "v": [], "z": 0.1}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("u[1]"), "{}", stderr(&o));
    let o = qrp(&["eval", "rphis", "/nonexistent/params.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qrp(&["eval", "nosuch", "-"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_every_target() {
    let cases = [
        ("kajihara_W", r#"{"x": [0.3, [0.2, 0.1]], "a": 0.2, "u": [0.4, 0.5, 0.6, 0.7], "v": [0.35, 0.45], "z": 0.1}"#),
        ("phi_D", r#"{"A": 0.3, "B": [0.2, 0.4], "C": 0.7, "x": [0.1, [0.2, 0.1]]}"#),
        ("jp_integral", r#"{"alpha": 1.5, "A": 0.2, "B": 0.3, "a": [0.25, 0.35, 0.45], "b": [[0.4, 0.1], 0.5, 0.6], "tau": 0.77, "x": 0.5}"#),
        ("vwp_W", r#"{"a1": [0.3, 0.1], "rest": [0.5, 0.6, 0.7], "z": 0.2}"#),
        ("rp_integral", r#"{"a": [0.5, 0.6, 0.7, 0.8], "b": [0.9, 1.1, 1.3, 0.5], "i": 1, "j": 2}"#),
    ];
    for (target, params) in cases {
        let o = qrp_stdin(&["eval", target, "-", "--format", "json"], params);
        assert_eq!(o.status.code(), Some(0), "{target}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["target"], target);
        assert!(v["shells_used"].as_u64().or(v["lattice_points"].as_u64()).unwrap() > 0);
    }
}
