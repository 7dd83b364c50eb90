//! The `qnet` binary: exit codes, files written, report schema.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnet")).args(args).output().expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// One `path: type` line per leaf, arrays described by their first element.
fn schema(v: &Value, path: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            out.push(format!("{path}: object"));
            for (k, child) in map {
                schema(child, &format!("{path}.{k}"), out);
            }
        }
        Value::Array(items) => {
            out.push(format!("{path}: array"));
            if let Some(first) = items.first() {
                schema(first, &format!("{path}[]"), out);
            }
        }
        Value::Null => out.push(format!("{path}: null")),
        Value::Bool(_) => out.push(format!("{path}: bool")),
        Value::Number(_) => out.push(format!("{path}: number")),
        Value::String(_) => out.push(format!("{path}: string")),
    }
}

fn analyze_json(model: &str, dir: &Path) -> Value {
    let out = dir.join("report.json");
    let o = qnet(&["analyze", model, "--json", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
}

#[test]
fn analyze_case_a() {
    let dir = tempfile::tempdir().unwrap();
    let o = qnet(&["analyze", &data("case_a.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict: throughput sub-optimal; NC possible"));
    let report = analyze_json(&data("case_a.json"), dir.path());
    assert_eq!(report["tol"], 1e-9);
    assert_eq!(report["kappa_grid"], serde_json::json!([1.0, 0.5, 0.25]));
    let weights: Vec<f64> = report["paths"].as_array().unwrap().iter().map(|p| p["weight"].as_f64().unwrap()).collect();
    assert_eq!(weights, vec![7.0, -4.0]);
    assert!((report["solution"]["rho_star"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn report_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let report = analyze_json(&data("case_a.json"), dir.path());
    let mut lines = Vec::new();
    schema(&report, "$", &mut lines);
    let actual = lines.join("\n") + "\n";
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/case_a_report_schema.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &actual).unwrap();
    }
    assert_eq!(actual, std::fs::read_to_string(golden).unwrap());
    // Same keys and types on a second run.
    let again = analyze_json(&data("case_a.json"), dir.path());
    assert_eq!(report, again);
}

#[test]
fn analyze_case_b_and_trivial_model() {
    let o = qnet(&["analyze", &data("case_b.json")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("weight -3.000000"));
    assert!(text.contains("throughput sub-optimal"));

    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.json");
    std::fs::write(&one, r#"{"classes":1,"stations":1,"lambda":[2],"nu":[1],"mu":[[2]]}"#).unwrap();
    let o = qnet(&["analyze", one.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("verdict: throughput optimal; no simple paths; NC impossible (no zero paths)"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"classes\": 2,\n  \"stations\": oops\n}").unwrap();
    let o = qnet(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let negative = dir.path().join("neg.json");
    std::fs::write(&negative, r#"{"classes":2,"stations":1,"lambda":[8,-4],"nu":[1],"mu":[[1],[1]]}"#).unwrap();
    assert_eq!(qnet(&["analyze", negative.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qnet(&["analyze", dir.path().join("missing.json").to_str().unwrap()]).status.code(), Some(2));

    // Non-unique static optimum: fine by default, rejected under --strict.
    let cd = data("class_dependent.json");
    assert_eq!(qnet(&["analyze", &cd]).status.code(), Some(0));
    assert_eq!(qnet(&["analyze", &cd, "--strict"]).status.code(), Some(3));
    assert_eq!(qnet(&["analyze", &data("case_a.json"), "--strict"]).status.code(), Some(0));

    let out = dir.path().join("sim");
    let o = qnet(&["simulate", &cd, "--n", "25", "--T", "0.1", "--reps", "1", "--policy", "negative-path", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no negative path"));
}

#[test]
fn simulate_writes_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = qnet(&[
            "simulate", &data("case_a.json"), "--n", "25,100", "--T", "0.5", "--reps", "1", "--policy", "greedy-basic",
            "--seed", "42", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read(out.join("trajectories.csv")).unwrap(),
            std::fs::read_to_string(out.join("summary.json")).unwrap(),
            stdout(&o),
        )
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let summary: Value = serde_json::from_str(&a.1).unwrap();
    let rows = summary["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for key in ["n", "mean", "median", "q10", "q90"] {
        assert!(rows[0].get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["heuristic_policy"], false);
    assert!(a.2.contains("median"));
}

#[test]
fn pump_is_flagged_as_heuristic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pump");
    let o = qnet(&[
        "simulate", &data("case_a.json"), "--n", "25", "--T", "0.2", "--reps", "2", "--policy", "negative-path",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("heuristic"));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["heuristic_policy"], true);
}

#[test]
fn generate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    for (i, j, seed, paths) in [(2, 2, 5, 1), (2, 3, 9, 2), (1, 1, 0, 0)] {
        let file = dir.path().join(format!("g{i}{j}.json"));
        let o = qnet(&["generate", "--I", &i.to_string(), "--J", &j.to_string(), "--seed", &seed.to_string(), "--out", file.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(dir.path().join(format!("g{i}{j}.planted.json")).exists());
        let report = analyze_json(file.to_str().unwrap(), dir.path());
        assert_eq!(report["assumptions"]["critically_loaded"], true);
        assert!((report["solution"]["rho_star"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(report["paths"].as_array().unwrap().len(), paths);
    }
    for seed in 0..15 {
        let file = dir.path().join("rt.json");
        let o = qnet(&["generate", "--I", "3", "--J", "3", "--seed", &seed.to_string(), "--out", file.to_str().unwrap()]);
        assert!(o.status.success());
        let report = analyze_json(file.to_str().unwrap(), dir.path());
        assert_eq!(report["assumptions"]["critically_loaded"], true);
        assert_eq!(report["defects"].as_array().unwrap().len(), 0);
    }
}
