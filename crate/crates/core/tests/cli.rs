//! The `affinescope` binary: outputs on disk, overrides and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn affinescope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affinescope")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn successful_run_writes_every_listed_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"params": {"m": [1, 2], "q": ["inf"]}}"#);
    let out_dir = dir.path().join("out");
    let out = affinescope(&["counterexample", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "42"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let printed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(Path::new(printed.trim()), out_dir.join("report.json"));

    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["command"], "counterexample");
    assert_eq!(report["config"]["seed"], 42);
    for name in report["artifacts"].as_array().unwrap() {
        assert!(out_dir.join(name.as_str().unwrap()).is_file(), "{name} missing");
    }
    let results: Value = serde_json::from_slice(&std::fs::read(out_dir.join("results.json")).unwrap()).unwrap();
    assert_eq!(results, report["results"]);
}

#[test]
fn rerun_reproduces_results_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"input": {"builtin": "random-lip:n=1:m=2"}, "params": {"p": 3, "nodes": 256}, "seed": 5}"#,
    );
    let mut bytes = Vec::new();
    for (i, threads) in ["1", "3"].into_iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = affinescope(&["fit", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--threads", threads]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        bytes.push((std::fs::read(out_dir.join("results.json")).unwrap(), std::fs::read(out_dir.join("fit.csv")).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1], "thread count changed the output");
}

#[test]
fn invalid_configurations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_field = write_config(dir.path(), "a.json", r#"{"params": {"m": [1], "colour": "red"}}"#);
    let wrong_command = write_config(dir.path(), "b.json", r#"{"command": "umd", "params": {}}"#);
    let missing_input = write_config(dir.path(), "c.json", r#"{"params": {"epsilon": 0.1, "u_min": 0.1}}"#);
    let missing_file = write_config(dir.path(), "d.json", r#"{"input": {"path": "/nonexistent/field.afsc"}}"#);
    let bad_corpus = write_config(dir.path(), "e.json", r#"{"input": {"builtin": "spiral:n=2"}}"#);
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for (command, cfg) in [
        ("counterexample", &unknown_field),
        ("counterexample", &wrong_command),
        ("witness", &missing_input),
        ("fit", &missing_file),
        ("fit", &bad_corpus),
        ("transmogrify", &unknown_field),
    ] {
        let o = affinescope(&[command, "--config", cfg, "--out", out]);
        assert_eq!(code(&o), 2, "{command} {cfg}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = affinescope(&["fit", "--config", &dir.path().join("absent.json").to_string_lossy(), "--out", out]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unrepresentable_scales_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", r#"{"input": {"builtin": "tensor:n=3:m=1:p=2:k=0.9:eps=0.03"}}"#);
    let o = affinescope(&["fit", "--config", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
