//! Integration coverage for CLI surfaces not exercised by the acceptance
//! pipeline: the imported-feature logistic-regression evaluation, the
//! VERDICT_OUT fallback, and error exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use verdict_core::cli::{dispatch, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["verdict".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    dispatch(argv)
}

fn write_labeled(path: &Path, n: usize) {
    let mut text = String::new();
    for i in 0..n {
        let (label, valence, body) = if i % 2 == 0 {
            ("Nta", "positive", format!("NTA fine kind {i}"))
        } else {
            ("Yta", "negative", format!("YTA rude wrong {i}"))
        };
        writeln!(
            text,
            r#"{{"post_id":"p{i}","comment_id":"c{i}","label":"{label}","valence":"{valence}","body":"{body}"}}"#
        )
        .unwrap();
    }
    fs::write(path, text).unwrap();
}

#[test]
fn eval_logreg_over_imported_features() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = dir.path().join("labeled.ndjson");
    write_labeled(&labeled, 60);

    // Feature vectors separable with noise: f0 tracks the class.
    let mut csv = String::from("comment_id,f0,f1\n");
    for i in 0..60 {
        let f0 = if i % 2 == 0 { -1.0 } else { 1.0 } + (i % 7) as f64 * 0.05;
        let f1 = (i % 5) as f64 * 0.1;
        writeln!(csv, "c{i},{f0},{f1}").unwrap();
    }
    let features = dir.path().join("features.csv");
    fs::write(&features, csv).unwrap();

    let out = dir.path().join("out");
    let code = run(&[
        "eval",
        "--labeled", labeled.to_str().unwrap(),
        "--model", "logreg",
        "--features", features.to_str().unwrap(),
        "--folds", "5",
        "--seed", "42",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let report = fs::read_to_string(out.join("cv_report.csv")).unwrap();
    assert!(report.starts_with("model,accuracy_mean"));
    let row = report.lines().nth(1).unwrap();
    assert!(row.starts_with("logreg,"));
    let accuracy: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(accuracy > 90.0, "separable features should evaluate well, got {accuracy}");
}

#[test]
fn eval_logreg_requires_features_flag() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = dir.path().join("labeled.ndjson");
    write_labeled(&labeled, 10);
    let code = run(&[
        "eval",
        "--labeled", labeled.to_str().unwrap(),
        "--model", "logreg",
        "--out", dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = dir.path().join("labeled.ndjson");
    write_labeled(&labeled, 20);
    let out = dir.path().join("env_out");
    std::env::set_var("VERDICT_OUT", &out);
    let code = run(&[
        "train",
        "--labeled", labeled.to_str().unwrap(),
        "--alpha", "1.0",
    ]);
    std::env::remove_var("VERDICT_OUT");
    assert_eq!(code, EXIT_OK);
    assert!(out.join("model.json").exists());
    assert!(out.join("run_manifest.json").exists());
}

#[test]
fn classify_rejects_judge_flag_combinations() {
    let dir = tempfile::tempdir().unwrap();
    // Neither --model nor --external.
    let code = run(&[
        "classify",
        "--corpus", dir.path().to_str().unwrap(),
        "--out", dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn bad_external_predictions_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("corpus")).unwrap();
    fs::write(dir.path().join("corpus/posts.ndjson"), "").unwrap();
    fs::write(dir.path().join("corpus/comments.ndjson"), "").unwrap();
    let preds = dir.path().join("preds.csv");
    fs::write(&preds, "comment_id,valence,score\nc1,meh,0.5\n").unwrap();
    let code = run(&[
        "classify",
        "--corpus", dir.path().join("corpus").to_str().unwrap(),
        "--external", preds.to_str().unwrap(),
        "--out", dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn model_version_gate_is_loud() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("corpus")).unwrap();
    fs::write(dir.path().join("corpus/posts.ndjson"), "").unwrap();
    fs::write(dir.path().join("corpus/comments.ndjson"), "").unwrap();
    let model = dir.path().join("model.json");
    fs::write(
        &model,
        r#"{"format_version":99,"kind":"multinomial_nb","alpha":1.0,"class_order":["positive","negative"],"vocab":{},"log_priors":[0.0,0.0],"log_likelihoods":[[],[]]}"#,
    )
    .unwrap();
    let code = run(&[
        "classify",
        "--corpus", dir.path().join("corpus").to_str().unwrap(),
        "--model", model.to_str().unwrap(),
        "--out", dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn train_rejects_unknown_model() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = dir.path().join("labeled.ndjson");
    write_labeled(&labeled, 10);
    let code = run(&[
        "train",
        "--labeled", labeled.to_str().unwrap(),
        "--model", "transformer",
        "--out", dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_USAGE);
}
