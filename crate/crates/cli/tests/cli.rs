//! Integration tests of the `dynmmd` binary: files written, exit codes and
//! configuration precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dynmmd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynmmd"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = dynmmd(dir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    dynmmd(dir, args).status.code().expect("exit code")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: impl AsRef<Path>) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn white_noise(dir: &Path, count: &str, seed: &str) {
    ok(
        dir,
        &["simulate", "--preset", "white-noise", "--count", count, "--length", "30", "--seed", seed, "--label", "w", "--out", "wn"],
    );
}

#[test]
fn circle_simulation_stays_on_the_unit_circle() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["simulate", "--system", "circle", "--count", "2", "--length", "40", "--seed", "1", "--out", "c"]);
    let text = fs::read_to_string(d.path().join("c/circle_0.csv")).unwrap();
    assert!(text.starts_with("t,x1,x2\n"));
    let r = rows(d.path().join("c/circle_0.csv"));
    assert_eq!(r.len(), 40);
    for (i, row) in r.iter().enumerate() {
        assert_eq!(row[0], i as f64);
        assert!((row[1].hypot(row[2]) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lorenz_simulation_has_expected_length() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["simulate", "--system", "lorenz", "--t-max", "200", "--dt", "0.1", "--seed", "4", "--out", "l"]);
    let r = rows(d.path().join("l/lorenz_0.csv"));
    assert_eq!(r.len(), 2001);
    assert_eq!(r[0].len(), 4);
    assert!((r[2000][0] - 200.0).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_one() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(d.path(), &["--help"]), 0);
    assert_eq!(code(d.path(), &["simulate", "--no-such-flag"]), 1);
    assert_eq!(code(d.path(), &["simulate", "--preset", "nope", "--out", "x"]), 1);
    assert_eq!(code(d.path(), &["simulate", "--count", "0", "--out", "x"]), 1);
    white_noise(d.path(), "2", "1");
    let x = "wn/white-noise_0.csv";
    let y = "wn/white-noise_1.csv";
    assert_eq!(code(d.path(), &["two-sample", x, y, "--a-star", "1", "--alpha", "1.5", "--out", "t"]), 1);
    assert_eq!(code(d.path(), &["two-sample", x, y, "--a-star", "1", "--n-perm", "10", "--out", "t"]), 1);
    // auto mode needs ensembles
    assert_eq!(code(d.path(), &["two-sample", x, y, "--a-star", "auto", "--out", "t"]), 1);
    assert_eq!(code(d.path(), &["bench", "--out", "b"]), 1);
}

#[test]
fn malformed_csv_names_file_and_line() {
    let d = TempDir::new().unwrap();
    white_noise(d.path(), "1", "1");
    fs::write(d.path().join("bad.csv"), "t,x1,x2\n0,1,2\n1,abc,2\n").unwrap();
    let out = dynmmd(d.path(), &["two-sample", "bad.csv", "wn/white-noise_0.csv", "--a-star", "1", "--out", "t"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");
    assert_eq!(code(d.path(), &["mixing", "missing.csv", "--out", "m"]), 2);
}

#[test]
fn dimension_mismatch_is_a_data_error() {
    let d = TempDir::new().unwrap();
    white_noise(d.path(), "1", "1");
    ok(d.path(), &["simulate", "--preset", "regime-a", "--length", "30", "--out", "ra"]);
    let out = ["two-sample", "wn/white-noise_0.csv", "ra/regime-a_0.csv", "--a-star", "1", "--out", "t"];
    assert_eq!(code(d.path(), &out), 2);
}

#[test]
fn too_few_thinned_points_is_infeasible() {
    let d = TempDir::new().unwrap();
    white_noise(d.path(), "2", "1");
    let args = ["two-sample", "wn/white-noise_0.csv", "wn/white-noise_1.csv", "--a-star", "30", "--out", "t"];
    assert_eq!(code(d.path(), &args), 3);
}

#[test]
fn non_mixing_ensembles_are_infeasible() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["simulate", "--system", "circle", "--count", "40", "--length", "81", "--seed", "2", "--out", "c"]);
    ok(d.path(), &["mixing", "c/*.csv", "--a-max", "40", "--seed", "3", "--n-perm", "200", "--out", "m"]);
    let s = json(d.path().join("m/mixing_summary.json"));
    assert_eq!(s["non_mixing"], true);
    assert!(s["a_star"].is_null());
    let args = [
        "two-sample",
        "c/circle_0.csv",
        "c/circle_1.csv",
        "--a-star",
        "auto",
        "--ensemble-x",
        "c/*.csv",
        "--ensemble-y",
        "c/*.csv",
        "--a-max",
        "20",
        "--n-perm",
        "200",
        "--out",
        "t",
    ];
    assert_eq!(code(d.path(), &args), 3);
}

#[test]
fn white_noise_mixes_at_the_first_shift() {
    let d = TempDir::new().unwrap();
    white_noise(d.path(), "60", "1");
    ok(d.path(), &["mixing", "wn/*.csv", "--shifts", "1,2,3", "--seed", "2", "--out", "m"]);
    let s = json(d.path().join("m/mixing_summary.json"));
    assert_eq!(s["a_star"], 1);
    assert_eq!(s["config"]["command"], "mixing");
    assert_eq!(s["config"]["shifts"], serde_json::json!([1, 2, 3]));
    let csv = fs::read_to_string(d.path().join("m/mixing_profile.csv")).unwrap();
    assert!(csv.starts_with("shift,stat_mean,stat_upper95,threshold\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn two_sample_result_embeds_config() {
    let d = TempDir::new().unwrap();
    white_noise(d.path(), "2", "1");
    let args = ["two-sample", "wn/white-noise_0.csv", "wn/white-noise_1.csv", "--a-star", "2", "--seed", "9", "--out", "t"];
    ok(d.path(), &args);
    let r = json(d.path().join("t/test_result.json"));
    assert_eq!(r["config"]["command"], "two-sample");
    assert_eq!(r["config"]["a_star"], 2);
    assert_eq!(r["config"]["count"], 15);
    assert_eq!(r["result"]["n_permutations"], 500);
    assert_eq!(r["result"]["alpha"], 0.05);
    let stat = r["result"]["statistic"].as_f64().unwrap();
    let threshold = r["result"]["threshold"].as_f64().unwrap();
    assert_eq!(r["result"]["reject"], stat > threshold);
}

#[test]
fn flags_override_config_file() {
    let d = TempDir::new().unwrap();
    white_noise(d.path(), "2", "1");
    fs::write(d.path().join("run.toml"), "seed = 5\nn_perm = 150\nalpha = 0.1\na_star = \"3\"\nout = \"from_file\"\n").unwrap();
    let args = [
        "two-sample",
        "wn/white-noise_0.csv",
        "wn/white-noise_1.csv",
        "--config",
        "run.toml",
        "--n-perm",
        "200",
    ];
    ok(d.path(), &args);
    let r = json(d.path().join("from_file/test_result.json"));
    assert_eq!(r["config"]["seed"], 5);
    assert_eq!(r["config"]["n_perm"], 200);
    assert_eq!(r["config"]["alpha"], 0.1);
    assert_eq!(r["config"]["a_star"], 3);

    fs::write(d.path().join("bad.toml"), "sed = 5\n").unwrap();
    assert_eq!(code(d.path(), &["simulate", "--config", "bad.toml", "--out", "x"]), 1);
    assert_eq!(code(d.path(), &["simulate", "--config", "absent.toml", "--out", "x"]), 1);
}

#[test]
fn single_reference_labels_every_query() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["simulate", "--preset", "regime-a", "--length", "200", "--label", "a", "--seed", "1", "--out", "ref"]);
    ok(d.path(), &["simulate", "--preset", "regime-b", "--count", "3", "--length", "200", "--seed", "2", "--out", "q"]);
    let args = ["classify", "--labeled", "ref/regime-a_0.csv", "--query", "q/*.csv", "--a-star", "3", "--out", "cl"];
    ok(d.path(), &args);
    let r = json(d.path().join("cl/classification.json"));
    assert_eq!(r["predictions"], 3);
    assert!(r["accuracy"].is_null());
    let csv = fs::read_to_string(d.path().join("cl/classification.csv")).unwrap();
    assert!(csv.starts_with("id,predicted,true_label,min_mmd,nearest_id\n"));
    let preds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(preds, vec!["a"; 3]);
}

#[test]
fn classify_modes_and_labels_are_checked() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["simulate", "--preset", "regime-a", "--count", "2", "--length", "100", "--out", "u"]);
    let both = ["classify", "--labeled", "u/*.csv", "--query", "u/*.csv", "--leave-one-out", "--a-star", "2", "--out", "x"];
    assert_eq!(code(d.path(), &both), 1);
    let neither = ["classify", "--labeled", "u/*.csv", "--a-star", "2", "--out", "x"];
    assert_eq!(code(d.path(), &neither), 1);
    let unlabeled = ["classify", "--labeled", "u/*.csv", "--leave-one-out", "--a-star", "2", "--out", "x"];
    assert_eq!(code(d.path(), &unlabeled), 2);
}

#[test]
fn leave_one_out_reports_baselines() {
    let d = TempDir::new().unwrap();
    for (preset, label, seed) in [("regime-a", "a", "1"), ("regime-b", "b", "2")] {
        let args = [
            "simulate", "--preset", preset, "--count", "6", "--length", "300", "--label", label, "--seed", seed, "--prefix", label, "--out", "lab",
        ];
        ok(d.path(), &args);
    }
    let args = [
        "classify",
        "--labeled",
        "lab/*.csv",
        "--leave-one-out",
        "--a-max",
        "20",
        "--baselines",
        "--n-perm",
        "200",
        "--seed",
        "3",
        "--out",
        "cl",
    ];
    ok(d.path(), &args);
    let r = json(d.path().join("cl/classification.json"));
    assert_eq!(r["evaluated"], 12);
    assert!(r["accuracy"].as_f64().unwrap() >= 0.9);
    for model in ["logistic_regression", "linear_svm"] {
        let b = &r["baselines"][model];
        assert!(b["mean_accuracy"].as_f64().unwrap() >= 0.8, "{model}: {b}");
        assert!(b["std_accuracy"].as_f64().unwrap() >= 0.0);
        assert_eq!(b["k_folds"], 3);
    }
}

#[test]
fn bench_writes_runs_and_summary() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["bench", "--suite", "lorenz", "--scale", "3", "--n-perm", "200", "--seed", "1", "--out", "b"]);
    let runs = fs::read_to_string(d.path().join("b/bench_lorenz.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 3 * 3);
    let summary = fs::read_to_string(d.path().join("b/bench_lorenz_summary.csv")).unwrap();
    assert!(summary.starts_with("metric,value\n"));
    for key in ["accuracy", "false_positive_rate", "dense_false_positive_rate"] {
        assert!(summary.lines().any(|l| l.starts_with(&format!("{key},"))), "{key} missing:\n{summary}");
    }
    let j = json(d.path().join("b/bench_lorenz.json"));
    assert_eq!(j["config"]["command"], "bench");
    assert_eq!(j["config"]["suite"], "lorenz");
    assert_eq!(code(d.path(), &["bench", "--suite", "lorenz", "--scale", "0", "--out", "b"]), 1);
}
