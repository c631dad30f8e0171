use std::process::{Command, Output};

fn condgreedy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condgreedy")).args(args).output().unwrap()
}

#[test]
fn construct_prints_document() {
    let out = condgreedy(&["construct", "--basis", "lindenstrauss:16", "--out", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["d"], 16);
    assert_eq!(doc["columns"].as_array().unwrap().len(), 16);
}

#[test]
fn oracle_ladder_for_difference() {
    let out = condgreedy(&["constants", "--basis", "difference:10", "--kind", "L", "--m", "2..10", "--oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("m,lb,method,delta_m"));
    let rows: Vec<_> = rows.collect();
    assert_eq!(rows.len(), 9);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert!(f[1].parse::<f64>().unwrap() >= f[0].parse::<f64>().unwrap() - 1.0);
    }
}

#[test]
fn passing_experiment_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = condgreedy(&["experiment", "unit-control", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["unit-control.csv", "unit-control-checks.csv", "unit-control.json", "unit-control.svg", "manifest.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["verdict"], "PASS");
    assert!(manifest["generated_at"].is_u64());
    let checks = std::fs::read_to_string(dir.path().join("unit-control-checks.csv")).unwrap();
    assert!(checks.starts_with("check,verdict,detail\n"));
}

#[test]
fn failing_experiment_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = condgreedy(&["experiment", "lorentz-embed", "--no-timestamp", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(!manifest.contains("generated_at"));
}

#[test]
fn config_scenarios_are_found() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenarios.toml");
    std::fs::write(
        &config,
        "[[scenario]]\nname = \"tiny\"\nrecipe = \"summing:6\"\nladder = [2, 4, 6]\nchecks = [\"lb-at-least-quarter-m\"]\n",
    )
    .unwrap();
    let list = condgreedy(&["list-scenarios", "--config", config.to_str().unwrap()]);
    assert!(String::from_utf8(list.stdout).unwrap().starts_with("tiny\tsumming:6\n"));
    let out_dir = dir.path().join("out");
    let out = condgreedy(&[
        "experiment",
        "tiny",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(condgreedy(&["bogus"]).status.code(), Some(2));
    assert_eq!(condgreedy(&["constants", "--basis", "summing:4", "--m", "3..1"]).status.code(), Some(2));
    assert_eq!(condgreedy(&["experiment", "no-such-scenario"]).status.code(), Some(2));
    let out = condgreedy(&["construct", "--basis", "blocksum(oops"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn thread_cap_keeps_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_condgreedy"))
            .env("CONDGREEDY_THREADS", threads)
            .args(["constants", "--basis", "lindenstrauss:32", "--m", "16,32", "--budget", "32"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}
