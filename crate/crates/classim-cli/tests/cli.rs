//! Black-box checks of the binary: exit codes, error-line shape, manifest
//! contents, locking, and format switching.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_classim"))
}

fn run(args: &[&str]) -> Output {
    cli().args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Ten samples per class with an explicit split column (6/2/2).
fn write_features(dir: &Path) -> PathBuf {
    let mut text = String::from("id,label,f0,split\n");
    for (label, base) in [("alpha", 0.0), ("beta", 5.0)] {
        for i in 0..10 {
            let split = match i {
                0..=5 => "train",
                6 | 7 => "validation",
                _ => "test",
            };
            text.push_str(&format!("{label}{i},{label},{},{split}\n", base + i as f64 * 0.05));
        }
    }
    let path = dir.join("features.csv");
    std::fs::write(&path, text).unwrap();
    path
}

/// The single error line all hard failures must print.
fn assert_error_line(out: &Output, kind: &str) {
    let text = stderr(out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "expected one error line, got {text:?}");
    assert!(
        lines[0].starts_with(&format!("error[{kind}]: ")),
        "unexpected error line {text:?}"
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["sim", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_features_file_exits_3_with_one_error_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "sim",
        "--features",
        "/nonexistent/features.csv",
        "--mode",
        "ovr",
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_error_line(&out, "file");
}

#[test]
fn malformed_features_report_the_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("features.csv");
    std::fs::write(&path, "id,label,f0\ns0,alpha,0.5\ns1,beta,not-a-number\n").unwrap();
    let out = run(&[
        "sim",
        "--features",
        path.to_str().unwrap(),
        "--mode",
        "ovr",
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_error_line(&out, "format");
    assert!(stderr(&out).contains(":3:"), "{}", stderr(&out));
}

#[test]
fn locked_out_dir_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let out_dir = tmp.path().join("out");
    std::fs::create_dir_all(&out_dir).unwrap();
    std::fs::write(out_dir.join(".lock"), "").unwrap();
    let out = run(&[
        "pd",
        "--features",
        features.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("locked"), "{}", stderr(&out));
}

#[test]
fn lock_is_released_after_success() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "pd",
        "--features",
        features.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(!out_dir.join(".lock").exists());
    assert!(out_dir.join("matrix.csv").exists());
    // A quiet run leaves standard error empty.
    assert!(out.stderr.is_empty(), "{}", stderr(&out));
}

#[test]
fn manifest_records_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "--seed",
        "5",
        "sim",
        "--features",
        features.to_str().unwrap(),
        "--mode",
        "ovr",
        "--top-k",
        "4",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["format_version"], 1);
    assert_eq!(manifest["tool"], "classim");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["format"], "csv");
    assert_eq!(manifest["command"][0], "--seed");
    assert_eq!(manifest["config"]["subcommand"], "sim");
    assert_eq!(manifest["config"]["mode"], "ovr");
    // Requested 4 neighbors of a 2-class problem: clamped to 1.
    assert_eq!(manifest["config"]["top_k"], 1);
    assert_eq!(manifest["config"]["external_predictions"], false);
    assert_eq!(manifest["config"]["train_config"]["seed"], 5);
    let inputs = manifest["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 1);
    assert!(inputs[0]["path"].as_str().unwrap().ends_with("features.csv"));
    assert_eq!(inputs[0]["sha256"].as_str().unwrap().len(), 64);
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["matrix.csv", "topk.csv"]);
    assert!(manifest["wall_time_secs"].as_f64().unwrap() >= 0.0);
}

#[test]
fn json_format_switches_the_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "--format",
        "json",
        "sim",
        "--features",
        features.to_str().unwrap(),
        "--mode",
        "ovr",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("matrix.json").exists());
    assert!(out_dir.join("topk.json").exists());
    assert!(!out_dir.join("matrix.csv").exists());
    let matrix: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("matrix.json")).unwrap())
            .unwrap();
    assert_eq!(matrix["kind"], "classim-matrix");
    assert_eq!(matrix["distance"], false);
    assert_eq!(matrix["classes"], serde_json::json!(["alpha", "beta"]));
}

#[test]
fn external_predictions_drive_the_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    // One beta-side misfire for alpha7: ClassSim = (1/2 + 0/2) / 2 = 0.25.
    let mut lines = Vec::new();
    for (id, label) in [("alpha6", "alpha"), ("alpha7", "alpha"), ("beta6", "beta"), ("beta7", "beta")] {
        let own = if label == "alpha" { "alpha" } else { "beta" };
        let other = if label == "alpha" { "beta" } else { "alpha" };
        let misfire = id == "alpha7";
        lines.push(format!(
            r#"{{"id":"{id}","true_label":"{label}","target":"{own}","score":0.9}}"#
        ));
        lines.push(format!(
            r#"{{"id":"{id}","true_label":"{label}","target":"{other}","score":{}}}"#,
            if misfire { 0.8 } else { 0.2 }
        ));
    }
    let preds = tmp.path().join("preds.jsonl");
    std::fs::write(&preds, lines.join("\n") + "\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "sim",
        "--features",
        features.to_str().unwrap(),
        "--mode",
        "ovr",
        "--predictions",
        preds.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let matrix = std::fs::read_to_string(out_dir.join("matrix.csv")).unwrap();
    assert!(matrix.contains("2.5000000000000000e-1"), "{matrix}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["external_predictions"], true);
    assert_eq!(manifest["config"]["train_config"], serde_json::Value::Null);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn broken_prediction_records_point_at_their_line() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let preds = tmp.path().join("preds.jsonl");
    std::fs::write(
        &preds,
        "{\"id\":\"alpha6\",\"true_label\":\"alpha\",\"target\":\"alpha\",\"score\":0.9}\nnot json\n",
    )
    .unwrap();
    let out = run(&[
        "sim",
        "--features",
        features.to_str().unwrap(),
        "--mode",
        "ovr",
        "--predictions",
        preds.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_error_line(&out, "format");
    assert!(stderr(&out).contains(":2:"), "{}", stderr(&out));
}

#[test]
fn top_k_zero_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let out = run(&[
        "pd",
        "--features",
        features.to_str().unwrap(),
        "--top-k",
        "0",
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_error_line(&out, "invalid-parameter");
}

#[test]
fn absurd_learning_rate_is_rescued_by_the_backoff() {
    // The halving rule rejects the overflowing first step instead of
    // propagating it, so even a 1e300 learning rate trains cleanly.
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let config = tmp.path().join("train.toml");
    std::fs::write(&config, "learning_rate = 1e300\nepochs = 50\n").unwrap();
    let out = run(&[
        "sim",
        "--features",
        features.to_str().unwrap(),
        "--mode",
        "ovr",
        "--train-config",
        config.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn non_finite_train_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let config = tmp.path().join("train.toml");
    std::fs::write(&config, "learning_rate = inf\n").unwrap();
    let out = run(&[
        "sim",
        "--features",
        features.to_str().unwrap(),
        "--mode",
        "ovr",
        "--train-config",
        config.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert_error_line(&out, "invalid-parameter");
}

#[test]
fn missing_model_dir_fails_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let features = write_features(tmp.path());
    let out = run(&[
        "twolevel",
        "eval",
        "--model-dir",
        tmp.path().join("nope").to_str().unwrap(),
        "--features",
        features.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error["), "{}", stderr(&out));
}
