use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowgroups"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["define", "builtin", "fib", "fibonacci"]).status.success());
    assert!(run(dir.path(), &["define", "builtin", "full", "full:0,1"]).status.success());
    dir
}

#[test]
fn generators_register_six_elements() {
    let dir = setup();
    let out = run(dir.path(), &["generators", "--system", "fib"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["generators"].as_array().unwrap().len(), 6);
    let eq = run(dir.path(), &["equal", "--system", "fib", "fib.a0 fib.a0^-1", "id"]);
    let v = json(&eq);
    assert_eq!(v["equal"], true);
    assert_eq!(v["lhs_hash"], v["rhs_hash"]);
}

#[test]
fn eval_half_translation() {
    let dir = setup();
    run(dir.path(), &["define", "translation", "half", "--system", "fib", "--by", "1/2"]);
    let out = run(dir.path(), &["eval", "--system", "fib", "--word", "half", "--point", "fixed:ba", "--steps", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let times: Vec<&str> = rows.iter().map(|r| &r[2]).collect();
    assert_eq!(times, ["0/2^0", "1/2^1", "0/2^0", "1/2^1"]);
    assert_eq!(rows[0][1], rows[1][1]);
    assert_ne!(rows[1][1], rows[2][1]);
    assert_eq!(&rows[1][3], "0.500000000000");
}

#[test]
fn eval_identity_is_constant() {
    let dir = setup();
    let out = run(dir.path(), &["eval", "--system", "full", "--word", "id", "--point", "periodic:01", "--time", "1/4", "--steps", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert!(lines.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn malformed_gluing_names_the_cells() {
    let dir = setup();
    let file = dir.path().join("bad.json");
    std::fs::write(
        &file,
        r#"{"window": [0, 0], "cells": [
            {"word": "a", "map": [["0", "1/4"], ["1", "5/4"]]},
            {"word": "b", "map": [["0", "0"], ["1", "1"]]}
        ]}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["define", "element", "g", "--system", "fib", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("gluing"), "{err}");
    assert!(err.contains('a') && err.contains('b'), "{err}");
}

#[test]
fn check_reports_are_deterministic() {
    let dir = setup();
    let a = run(dir.path(), &["check", "group-axioms", "--system", "fib", "--samples", "10", "--seed", "7"]);
    let b = run(dir.path(), &["check", "group-axioms", "--system", "fib", "--samples", "10", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["pass"], true);
}

#[test]
fn injected_fault_fails_with_counterexample() {
    let dir = setup();
    let out = run(dir.path(), &["check", "group-axioms", "--system", "fib", "--samples", "5", "--inject-bad"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    assert!(v["counterexample"]["data"]["claimed_inverse"].is_object());
}

#[test]
fn unknown_names_are_input_errors() {
    let dir = setup();
    assert_eq!(run(dir.path(), &["invert", "--system", "fib", "nothing"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["check", "no-such-suite", "--system", "fib"]).status.code(), Some(2));
}

#[test]
fn return_budget_exhaustion() {
    let dir = setup();
    let out = run(dir.path(), &["return-time", "--system", "full", "--clopen", "1@0", "--entry", "--budget-return", "16"]);
    assert_eq!(out.status.code(), Some(3));
    let ok = run(dir.path(), &["return-time", "--system", "fib", "--clopen", "b@0"]);
    assert_eq!(json(&ok)["first_time"], 2);
}

#[test]
fn induce_fibonacci_letter() {
    let dir = setup();
    let v = json(&run(dir.path(), &["induce", "--system", "fib", "--clopen", "a@0"]));
    assert_eq!(v["return_words"], serde_json::json!(["a", "ab"]));
}

#[test]
fn approximation_and_restriction() {
    let dir = setup();
    assert!(run(dir.path(), &["approx", "--system", "fib", "--level", "1", "--as", "x1"]).status.success());
    run(dir.path(), &["define", "chart", "k", "--system", "x1", "--clopen", "bb@0", "--interval", "0,1/2", "--map", "a"]);
    let out = run(dir.path(), &["restrict", "--system", "x1", "--element", "k", "--to", "fib", "--as", "rk"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&run(dir.path(), &["equal", "--system", "fib", "rk", "id"]));
    assert_eq!(v["equal"], true);
}

#[test]
fn move_domain_certificate() {
    let dir = setup();
    let out = run(dir.path(), &["move-domain", "--system", "fib", "--clopen", "b@0", "--from", "0,1/4", "--to", "3/2,7/4"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn first_return_and_fragment() {
    let dir = setup();
    let out = run(dir.path(), &["decompose-first-return", "--system", "fib", "--clopen", "b@0", "--interval", "0,1/4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["charts"].as_array().unwrap().len(), 2);
    run(dir.path(), &["define", "chart", "h", "--system", "fib", "--clopen", "X", "--interval", "0,3/4", "--map", "0:0;1/8:1/8;1/4:3/8;3/8:1/2;5/8:5/8;3/4:3/4"]);
    let out = run(dir.path(), &["fragment", "--system", "fib", "--element", "h", "--clopen", "X", "--interval", "0,3/4", "--cover", "X:0,1/2", "X:1/4,3/4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["factors"].as_array().unwrap().len() >= 2);
}

#[test]
fn symbol_expansion_conjugation() {
    let dir = setup();
    run(dir.path(), &["define", "translation", "half", "--system", "full", "--by", "1/2"]);
    let out = run(dir.path(), &["ps-conjugate", "--system", "full", "--element", "half", "--expand", "1", "--target", "ex", "--as", "c"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&run(dir.path(), &["support", "--system", "ex", "c"]));
    assert!(!v["support"].as_array().unwrap().is_empty());
}

#[test]
fn out_flag_writes_file() {
    let dir = setup();
    let out = run(dir.path(), &["metric", "--system", "fib", "flow(1/2)", "id", "--out", "m.json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(v["distance"]["exact"], "1/2^0");
}
