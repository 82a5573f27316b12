//! End-to-end runs of the compiled binary against small datasets.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn trustsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trustsense"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Synthesize a small corpus and return its path inside `dir`.
fn small_corpus(dir: &Path, n_per_class: usize, seed: u64) -> PathBuf {
    let path = dir.join("corpus.csv");
    let output = trustsense(&[
        "synth",
        "--output",
        path.to_str().unwrap(),
        "--n-per-class",
        &n_per_class.to_string(),
        "--seed",
        &seed.to_string(),
    ]);
    assert!(output.status.success(), "synth failed: {}", stderr_of(&output));
    path
}

#[test]
fn synth_same_seed_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = small_corpus(dir.path(), 8, 21);
    let b_path = dir.path().join("again.csv");
    let output = trustsense(&[
        "synth",
        "--output",
        b_path.to_str().unwrap(),
        "--n-per-class",
        "8",
        "--seed",
        "21",
    ]);
    assert!(output.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b_path).unwrap());
}

#[test]
fn synth_different_seed_differs() {
    let dir = TempDir::new().unwrap();
    let a = small_corpus(dir.path(), 8, 21);
    let b = dir.path().join("other.csv");
    let output = trustsense(&[
        "synth",
        "--output",
        b.to_str().unwrap(),
        "--n-per-class",
        "8",
        "--seed",
        "22",
    ]);
    assert!(output.status.success());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn synth_rejects_zero_records() {
    let output = trustsense(&["synth", "--output", "/tmp/unused.csv", "--n-per-class", "0"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let output = trustsense(&["evaluate", "--input", "x.csv", "--frobnicate"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error_naming_the_stage() {
    let output = trustsense(&[
        "train",
        "--input",
        "/nonexistent/missing.csv",
        "--output",
        "/tmp/unused.json",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(
        stderr.contains("loading dataset"),
        "stage missing from: {stderr}"
    );
}

#[test]
fn bad_hyperparameter_value_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path(), 4, 1);
    let output = trustsense(&[
        "train",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        dir.path().join("m.json").to_str().unwrap(),
        "--dropout",
        "1.5",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("--dropout"));
}

#[test]
fn train_then_explain_through_a_bundle() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path(), 20, 5);
    let bundle = dir.path().join("model.json");
    let output = trustsense(&[
        "train",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        bundle.to_str().unwrap(),
        "--seed",
        "3",
        "--epochs",
        "10",
    ]);
    assert!(output.status.success(), "train failed: {}", stderr_of(&output));
    assert!(stdout_of(&output).contains("training accuracy"));

    let output = trustsense(&[
        "explain",
        "--input",
        corpus.to_str().unwrap(),
        "--model-file",
        bundle.to_str().unwrap(),
        "--seed",
        "3",
        "--lime-samples",
        "200",
        "--lime-k",
        "5",
        "--record-index",
        "0",
    ]);
    assert!(output.status.success(), "explain failed: {}", stderr_of(&output));
    let stdout = stdout_of(&output);
    for section in ["Prediction probabilities", "Class 1 features", "Class 0 features"] {
        assert!(stdout.contains(section), "missing section {section:?}");
    }
}

#[test]
fn explain_rejects_out_of_range_record_index() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path(), 10, 5);
    let output = trustsense(&[
        "explain",
        "--input",
        corpus.to_str().unwrap(),
        "--seed",
        "3",
        "--epochs",
        "5",
        "--lime-samples",
        "100",
        "--record-index",
        "9999",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("--record-index"));
}

#[test]
fn select_emits_the_requested_combination_sizes() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path(), 20, 9);
    let out_dir = dir.path().join("select");
    let output = trustsense(&[
        "select",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
        "--seed",
        "2",
        "--step",
        "16",
        "--sizes",
        "3,5",
        "--lime-records",
        "5",
        "--lime-samples",
        "100",
        "--epochs",
        "10",
    ]);
    assert!(output.status.success(), "select failed: {}", stderr_of(&output));
    for size in [3usize, 5] {
        let path = out_dir.join(format!("combination_{size}.txt"));
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), size, "wrong length in {path:?}");
    }
    let ranking: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("rfe.json")).unwrap()).unwrap();
    assert_eq!(ranking.as_object().unwrap().len(), 200);
    assert!(out_dir.join("influence.json").exists());
    assert!(out_dir.join("selected.txt").exists());
}

#[test]
fn evaluate_renders_both_formats() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path(), 16, 13);
    let text = trustsense(&[
        "evaluate",
        "--input",
        corpus.to_str().unwrap(),
        "--seed",
        "1",
        "--k",
        "4",
        "--epochs",
        "10",
    ]);
    assert!(text.status.success(), "evaluate failed: {}", stderr_of(&text));
    let stdout = stdout_of(&text);
    assert!(stdout.contains("Accuracy") && stdout.contains("Precision"));
    assert!(stdout.contains("Mean"));

    let json = trustsense(&[
        "evaluate",
        "--input",
        corpus.to_str().unwrap(),
        "--seed",
        "1",
        "--k",
        "4",
        "--epochs",
        "10",
        "--format",
        "json",
    ]);
    assert!(json.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&json)).unwrap();
    assert_eq!(value["k"], 4);
    assert!(value["aggregates"]["accuracy"]["mean"].is_number());
}

#[test]
fn evaluate_holdout_uses_a_feature_subset() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path(), 20, 17);
    let list = dir.path().join("features.txt");
    fs::write(&list, "Mean - F3\nVariance - C4\nGSR_MaxPhasic\n").unwrap();
    let output = trustsense(&[
        "evaluate",
        "--input",
        corpus.to_str().unwrap(),
        "--seed",
        "6",
        "--epochs",
        "15",
        "--holdout",
        "--features-file",
        list.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "holdout failed: {}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("confusion:"));
    assert!(stdout.contains("accuracy"));
}

#[test]
fn reports_are_reproducible_across_runs() {
    let dir = TempDir::new().unwrap();
    let corpus = small_corpus(dir.path(), 12, 19);
    let run = |name: &str| {
        let path = dir.path().join(name);
        let output = trustsense(&[
            "evaluate",
            "--input",
            corpus.to_str().unwrap(),
            "--output",
            path.to_str().unwrap(),
            "--seed",
            "8",
            "--k",
            "3",
            "--epochs",
            "10",
            "--format",
            "json",
        ]);
        assert!(output.status.success());
        fs::read(&path).unwrap()
    };
    assert_eq!(run("first.json"), run("second.json"));
}
