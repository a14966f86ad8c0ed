use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TOY: &str = "\
id,latitude,longitude,stake,country
nyc,40.71,-74.01,50,US
fra,50.11,8.68,30,DE
sin,1.35,103.82,20,SG
";

fn gpos(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpos"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("toy.csv"), TOY).unwrap();
    dir
}

#[test]
fn metrics_report_has_expected_keys() {
    let dir = toy_dir();
    let out = gpos(dir.path(), &["metrics", "--input", "toy.csv", "--lambda", "1,0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.path().join("out/toy.metrics.json"));
    assert_eq!(doc["command"], "metrics");
    assert_eq!(doc["dataset_digest"].as_str().unwrap().len(), 64);
    assert_eq!(doc["run_config"]["lambdas"], serde_json::json!([1.0, 0.5]));
    let result = &doc["result"];
    for key in [
        "gec",
        "gini_country",
        "gini_weight",
        "top_countries",
        "unknown_country_count",
        "gini_proximity",
        "nakamoto_1_3",
        "nakamoto_2_3",
        "entropy",
        "lambda",
    ] {
        assert!(result.get(key).is_some(), "missing {key}");
    }
    assert_eq!(result["linear"].as_array().unwrap().len(), 2);
    assert_eq!(result["validator_count"], 3);
    assert!(dir.path().join("out/toy.kde.lambda-0.5.csv").exists());
}

#[test]
fn sweep_writes_one_row_per_lambda() {
    let dir = toy_dir();
    let out = gpos(
        dir.path(),
        &["sweep", "--input", "toy.csv", "--lambda", "0.5,0.6,0.7,0.8,0.9,1", "--rounds", "20"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/toy.sweep.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "lambda,gec,mean_latency_ms,tps_pipelined,tps_sequential");
    assert_eq!(rows.len(), 7);
}

#[test]
fn failures_exit_nonzero() {
    let dir = toy_dir();
    fs::write(dir.path().join("bad.json"), r#"{"lamdas": [0.5]}"#).unwrap();
    let bad_config = gpos(dir.path(), &["metrics", "--config", "bad.json", "--input", "toy.csv"]);
    assert!(!bad_config.status.success());
    assert!(String::from_utf8_lossy(&bad_config.stderr).starts_with("gpos:"));

    let missing = gpos(dir.path(), &["gdi", "--input", "nowhere.csv"]);
    assert!(!missing.status.success());

    let bad_lambda = gpos(dir.path(), &["weights", "--input", "toy.csv", "--lambda", "1.5"]);
    assert!(!bad_lambda.status.success());

    let unknown = gpos(dir.path(), &["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn inputs_are_left_untouched() {
    let dir = toy_dir();
    for cmd in ["preprocess", "gdi", "weights", "attack"] {
        let out = gpos(dir.path(), &[cmd, "--input", "toy.csv"]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read_to_string(dir.path().join("toy.csv")).unwrap(), TOY);
}

#[test]
fn reconfig_replay_reproduces_the_epoch() {
    let dir = toy_dir();
    let run = gpos(dir.path(), &["reconfig", "--input", "toy.csv"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let replay = gpos(dir.path(), &["reconfig", "--events", "out/toy.events.jsonl"]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    let epoch = read_json(&dir.path().join("out/toy.epoch.json"));
    let replayed = read_json(&dir.path().join("out/toy.events.replay.json"));
    assert_eq!(epoch["result"]["header_commit"], replayed["result"]["header_commit"]);
    assert_eq!(epoch["result"]["epoch"], replayed["result"]["epoch"]);
    assert_eq!(replayed["result"]["commit_verified"], true);
    assert_eq!(replayed["result"]["conserved"], true);
}

#[test]
fn weights_csv_has_a_column_per_grid_value() {
    let dir = toy_dir();
    let out = gpos(dir.path(), &["weights", "--input", "toy.csv", "--lambda", "1,0.5", "--alpha", "0.5"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("out/toy.weights.csv")).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next().unwrap(), "id,stake,lambda=1,lambda=0.5,alpha=0.5");
    let sums: Vec<f64> = rows
        .map(|r| r.split(',').skip(2).map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .fold(vec![0.0; 3], |acc, r| acc.iter().zip(&r).map(|(a, b)| a + b).collect());
    for s in sums {
        assert!((s - 1.0).abs() < 1e-9);
    }
}
