use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_group-explain");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("GROUP_EXPLAIN_WORKERS").output().expect("binary runs")
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn generate(dir: &Path, family: &str, samples: usize) -> std::path::PathBuf {
    let out = run(&["generate", "--family", family, "--samples", &samples.to_string(), "--seed", "5", "--out", s(dir)]);
    assert!(out.status.success(), "{}", text(&out));
    dir.join("data.csv")
}

#[test]
fn missing_data_file_is_an_input_error() {
    let out = run(&["cluster", "--data", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("/definitely/not/here.csv"));
}

#[test]
fn conflicting_partition_sources_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&dir.path().join("g"), "blocks:2,2;0.5", 50);
    let p = dir.path().join("p.json");
    std::fs::write(&p, "[[0,1],[2,3]]").unwrap();
    let out = run(&[
        "explain", "--data", s(&data), "--background", s(&data), "--model", "poly:x1", "--partition", s(&p),
        "--threshold", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));
}

#[test]
fn cluster_recovers_mictest_groups() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&dir.path().join("g"), "mictest", 2000);
    let out_dir = dir.path().join("c");
    let out = run(&["cluster", "--data", s(&data), "--threshold", "0.7", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", text(&out));
    let partition = read_json(&out_dir.join("partition.json"));
    assert_eq!(partition, serde_json::json!([[0, 1, 2, 3], [4], [5, 6]]));
    for f in ["dissimilarity.csv", "tree.json", "tree.nwk", "tree.dot", "manifest.json"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["command"], "cluster");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn explain_bilinear_quotient_sums() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&dir.path().join("g"), "blocks:2,2;0.5", 200);
    let p = dir.path().join("p.json");
    std::fs::write(&p, "[[0,1],[2,3]]").unwrap();
    let out_dir = dir.path().join("e");
    let out = run(&[
        "explain", "--data", s(&data), "--background", s(&data), "--model", "poly:x1*x2 + x3*x4 + x1*x3",
        "--value", "owen", "--partition", s(&p), "--out", s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let e = read_json(&out_dir.join("explanations.json"));
    let units = e["units"].as_array().unwrap();
    let col = |kind: &str, label: &str| {
        units.iter().position(|u| u["kind"] == kind && u["label"] == label).unwrap_or_else(|| panic!("{kind}:{label}"))
    };
    let rows = e["values"].as_array().unwrap();
    assert_eq!(rows.len(), 200);
    for (r, row) in rows.iter().enumerate() {
        let x = |c: usize| row[c].as_f64().unwrap();
        for (block, members) in [("x1+x2", ["x1", "x2"]), ("x3+x4", ["x3", "x4"])] {
            let sum: f64 = members.iter().map(|m| x(col("coalitional", m))).sum();
            assert!((sum - x(col("quotient", block))).abs() < 1e-10, "row {r} block {block}");
        }
        let total: f64 = ["x1+x2", "x3+x4"].iter().map(|b| x(col("quotient", b))).sum();
        let gap = e["predictions"][r].as_f64().unwrap() - e["baselines"][r].as_f64().unwrap();
        assert!((total - gap).abs() < 1e-9);
    }
    assert!(out_dir.join("explanations.csv").exists());
    assert!(out_dir.join("explanations.meta.json").exists());
}

#[test]
fn diagnose_same_model_gives_zero_differences() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&dir.path().join("g"), "blocks:2,2;0.5", 100);
    let out_dir = dir.path().join("d");
    let m = "poly:x1*x2 - x3";
    let out = run(&[
        "diagnose", "--data", s(&data), "--background", s(&data), "--model", m, "--model", m, "--out", s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let report = read_json(&out_dir.join("stability.json"));
    assert_eq!(report["model_difference_norm"].as_f64(), Some(0.0));
    for u in report["units"].as_array().unwrap() {
        assert_eq!(u["difference_norm"].as_f64(), Some(0.0));
    }
}

#[test]
fn diagnose_from_saved_explanations() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&dir.path().join("g"), "blocks:2,2;0.5", 100);
    let mut files = Vec::new();
    for (k, m) in ["poly:x1 + x2", "poly:x1 + x2 + x3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("e{k}"));
        let out = run(&["explain", "--data", s(&data), "--background", s(&data), "--model", m, "--out", s(&out_dir)]);
        assert!(out.status.success(), "{}", text(&out));
        files.push(out_dir.join("explanations.json"));
    }
    let out_dir = dir.path().join("d");
    let out = run(&[
        "diagnose", "--data", s(&data), "--explanations", s(&files[0]), "--explanations", s(&files[1]), "--out",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let report = read_json(&out_dir.join("stability.json"));
    let x3 = report["units"].as_array().unwrap().iter().find(|u| u["label"] == "x3").unwrap();
    assert!(x3["difference_norm"].as_f64().unwrap() > 0.5);
    let x1 = report["units"].as_array().unwrap().iter().find(|u| u["label"] == "x1").unwrap();
    assert!(x1["difference_norm"].as_f64().unwrap() < 1e-12);
}

#[test]
fn gamecheck_matches_expected_outcomes() {
    for value in ["owen", "banzhaf-owen", "shapley", "banzhaf", "symmetric-banzhaf", "two-step-shapley"] {
        let out = run(&["gamecheck", "--value", value, "--trials", "100", "--seed", "3"]);
        let t = text(&out);
        assert_eq!(out.status.code(), Some(0), "{value}:\n{t}");
        assert!(!t.contains("UNEXPECTED"), "{value}:\n{t}");
    }
    let out = run(&["gamecheck", "--value", "banzhaf-owen", "--trials", "100"]);
    let t = text(&out);
    assert!(t.contains("QP witness"), "{t}");
}

#[test]
fn gamecheck_custom_weights() {
    let dir = tempfile::tempdir().unwrap();
    // Weight only on the empty coalition: h_i(v) = v({i}) - v(∅), linear, symmetric, null-player.
    let mut weights = serde_json::Map::new();
    for n in 1..=8usize {
        let w: Vec<f64> = (0..n).map(|s| if s == 0 { 1.0 } else { 0.0 }).collect();
        weights.insert(n.to_string(), serde_json::json!(w));
    }
    let path = dir.path().join("w.json");
    std::fs::write(&path, serde_json::json!({"name": "first-entry", "weights": weights}).to_string()).unwrap();
    let out = run(&["gamecheck", "--weights", s(&path), "--trials", "50"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));

    std::fs::write(&path, r#"{"name": "short", "weights": {"1": [1.0]}}"#).unwrap();
    let out = run(&["gamecheck", "--weights", s(&path)]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));
}

#[test]
fn subprocess_protocol_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&dir.path().join("g"), "blocks:2;0.5", 20);
    let out = run(&[
        "explain", "--data", s(&data), "--background", s(&data), "--model", "cmd:while read l; do echo nope; done",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out));
}

#[test]
fn subprocess_scoring_server_matches_analytic_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&dir.path().join("g"), "blocks:2,1;0.5", 40);
    let model = "poly:x1*x2 + 2*x3";
    let serve = format!("cmd:{BIN} serve --model '{model}' --arity 3");
    let mut results = Vec::new();
    for (k, m) in [model, serve.as_str()].iter().enumerate() {
        let out_dir = dir.path().join(format!("e{k}"));
        let out = run(&[
            "explain", "--data", s(&data), "--background", s(&data), "--model", m, "--batch-size", "7", "--out",
            s(&out_dir),
        ]);
        assert!(out.status.success(), "{}", text(&out));
        results.push(read_json(&out_dir.join("explanations.json")));
    }
    let (a, b) = (&results[0]["values"], &results[1]["values"]);
    for (ra, rb) in a.as_array().unwrap().iter().zip(b.as_array().unwrap()) {
        for (x, y) in ra.as_array().unwrap().iter().zip(rb.as_array().unwrap()) {
            assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out_dir = dir.path().join("g");
    std::fs::write(&cfg, serde_json::json!({"family": "mictest", "samples": 30, "seed": 1}).to_string()).unwrap();
    let out = run(&["--config", s(&cfg), "generate", "--samples", "12", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", text(&out));
    let csv = std::fs::read_to_string(out_dir.join("data.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["config"]["seed"], 1);

    std::fs::write(&cfg, r#"{"famly": "mictest"}"#).unwrap();
    let out = run(&["--config", s(&cfg), "generate"]);
    assert_eq!(out.status.code(), Some(2));
}
