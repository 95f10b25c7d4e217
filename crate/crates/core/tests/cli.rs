mod common;

use std::path::Path;
use std::process::{Command, Output};

fn reann(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reann")).args(args).output().unwrap()
}

fn lenses() -> String {
    common::data_file("lenses.data").display().to_string()
}

#[test]
fn run_writes_report_and_rules() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let res = reann(&["run", "--dataset", "lenses", "--data-path", &lenses(), "--seeds", "0-1", "--out", &out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["report.json", "report.txt", "config.toml", "seed-0/rules.txt", "seed-1/extraction.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let rules = std::fs::read_to_string(dir.path().join("seed-0/rules.txt")).unwrap();
    assert!(rules.starts_with("Rule 1: If ") || rules.starts_with("Default Rule: "));
    assert!(rules.trim_end().lines().last().unwrap().starts_with("Default Rule: "));

    let report = dir.path().join("report.json").display().to_string();
    let res = reann(&["report", "--from", &report, "--format", "json"]);
    assert!(res.status.success());
    let json: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(json["schema"], "reann.report/v1");

    let doc = dir.path().join("seed-0/rules.json").display().to_string();
    let res = reann(&["eval", "--rules", &doc, "--dataset", "lenses", "--data-path", &lenses(), "--split", "train"]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("accuracy: "));
}

#[test]
fn phases_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let at = |f: &str| Path::new(&out).join(f).display().to_string();
    let common = ["--dataset", "lenses", "--seeds", "2", "--out", &out];
    let data = lenses();
    let mut steps: Vec<Vec<&str>> = vec![vec!["phase", "grow"]];
    let (grown, pruned, disc) = (at("grown.json"), at("pruned.json"), at("discretized.json"));
    steps.push(vec!["phase", "prune", "--from", &grown]);
    steps.push(vec!["phase", "discretize", "--from", &pruned]);
    steps.push(vec!["phase", "extract", "--from", &disc]);
    for step in steps {
        let mut args = step.clone();
        args.extend(common);
        args.extend(["--data-path", &data]);
        let res = reann(&args);
        assert!(res.status.success(), "{step:?}: {}", String::from_utf8_lossy(&res.stderr));
    }
    assert!(Path::new(&at("rules.txt")).exists());
}

#[test]
fn bad_input_fails() {
    assert!(!reann(&["run", "--dataset", "nosuch"]).status.success());
    assert!(!reann(&["run", "--dataset", "lenses", "--data-path", "/nonexistent/file"]).status.success());
    assert!(!reann(&["run", "--dataset", "lenses", "--seeds", "5-1"]).status.success());
}
