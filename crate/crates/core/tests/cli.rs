mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::corpus_dir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chc-precond"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn corpus_file(name: &str) -> String {
    corpus_dir().join(name).display().to_string()
}

fn temp_file(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("chc-precond-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn text_report() {
    let out = run(&["analyze", &corpus_file("step_sum.chc"), "--iterations", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("precondition for init(I,A,B,N):"), "{text}");
    assert!(text.contains("classification: non-trivial"), "{text}");
    assert!(text.contains("eliminated (feasible, iteration 1)"), "{text}");
}

#[test]
fn json_report_fields() {
    let out = run(&["analyze", &corpus_file("running.chc"), "--iterations", "0", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in [
        "input",
        "mode",
        "n",
        "precondition",
        "classification",
        "swp_per_iteration",
        "eliminated_traces",
        "timings",
        "warnings",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["n"], 0);
    assert_eq!(v["precondition"].as_array().unwrap().len(), 6);
    let c = &v["precondition"][0][0];
    assert!(c["coeffs"].is_object() && c["rel"].is_string() && c["const"].is_number());
}

#[test]
fn parse_error_exits_2() {
    let f = temp_file("bad.chc", ":- initial(init/1).\ninit(X) :- X * X = 1.\nfalse :- init(X).");
    let out = run(&["analyze", &f]);
    assert_eq!(out.status.code(), Some(2));
    let f = temp_file("broken.chc", "false :- p(X");
    assert_eq!(run(&["analyze", &f]).status.code(), Some(2));
}

#[test]
fn coverage_error_exits_2() {
    // false is derivable from q's fact without touching init.
    let f = temp_file(
        "uncovered.chc",
        ":- initial(init/1).\ninit(X).\nq(X) :- X = 1.\nfalse :- init(X).\nfalse :- q(X).",
    );
    let out = run(&["analyze", &f]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn timeout_exits_3_with_fallback() {
    let out = run(&["analyze", &corpus_file("step_sum.chc"), "--timeout", "0", "--format", "json"]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["timed_out"], true);
    assert!(v["precondition"].is_array());
}

#[test]
fn initial_override() {
    let f = temp_file(
        "noinit.chc",
        "start(X) :- X >= 0.\nl(X) :- start(X).\nfalse :- X < 0, l(X).",
    );
    assert_eq!(run(&["analyze", &f]).status.code(), Some(2));
    let out = run(&["analyze", &f, "--initial", "start/1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(run(&["analyze", &f, "--initial", "start"]).status.code(), Some(2));
}

#[test]
fn dumps_go_to_stderr() {
    let out = run(&[
        "analyze",
        &corpus_file("running.chc"),
        "--iterations",
        "0",
        "--dump",
        "pe",
        "--dump",
        "invariants",
        "--dump",
        "trace",
        "--dump",
        "cs",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8(out.stderr).unwrap();
    for marker in ["% pe, iteration 0", "% cs, iteration 0", "% invariants, iteration 0", "% pe trace, iteration 0"] {
        assert!(err.contains(marker), "{marker} in {err}");
    }
    assert!(err.contains("init"), "{err}");
}

#[test]
fn strip_init_mode() {
    let out = run(&["analyze", &corpus_file("nonneg.chc"), "--strip-init", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mode"], "strip-init");
    assert_eq!(v["classification"], "more-general");
}

#[test]
fn missing_file_exits_2() {
    let missing = Path::new("/nonexistent/none.chc").display().to_string();
    assert_eq!(run(&["analyze", &missing]).status.code(), Some(2));
}
