use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn multical(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multical")).args(args).output().expect("binary runs")
}

fn gen(dir: &Path, n: usize) -> String {
    let path = dir.join("wave.csv");
    let out = multical(&["gen-waveform", "--n", &n.to_string(), "--seed", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_waveform_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), 40);
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 22);
    assert!(header.ends_with(",class"));
    assert_eq!(lines.count(), 40);
}

#[test]
fn selftest_passes() {
    let out = multical(&["selftest", "--seed", "5"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().count() >= 4);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
}

#[test]
fn small_run_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), 150);
    let out_path = dir.path().join("res.csv");
    let out = multical(&[
        "run", "--data", &data, "--folds", "3", "--seed", "2", "--format", "csv", "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(&out_path).unwrap();
    assert!(metrics.starts_with("dataset,classifier,test,alpha"));
    assert_eq!(metrics.lines().count(), 2);
    assert!(dir.path().join("res.timings.csv").exists());
}

#[test]
fn run_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), 120);
    let args = ["run", "--data", &data, "--folds", "3", "--scenario", "multi_class_raw,ovr_calibrated", "--format", "markdown"];
    let a = multical(&args);
    let b = multical(&args);
    assert!(a.status.success());
    let table = |o: &Output| String::from_utf8_lossy(&o.stdout).split("\n\n").next().unwrap().to_string();
    assert_eq!(table(&a), table(&b));
}

#[test]
fn bad_format_and_scenario_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), 60);
    let out = multical(&["run", "--data", &data, "--folds", "2", "--format", "xlsx"]);
    assert_eq!(out.status.code(), Some(2));
    let out = multical(&["run", "--data", &data, "--folds", "2", "--scenario", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_set_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = multical(&["run", "--data", dir.path().join("absent.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn partial_failure_exits_nonzero_but_reports_rest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    fs::write(
        &cfg,
        r#"{
            "datasets": [
                {"name": "wave", "waveform": {"n": 90, "seed": 1}},
                {"name": "gone", "path": "absent.csv"}
            ],
            "classifiers": [{"kind": "naive_bayes"}],
            "folds": 3
        }"#,
    )
    .unwrap();
    let out = multical(&["run", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("wave,nb"));
}
