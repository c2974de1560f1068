//! End-to-end tests driving the compiled `cutpoint` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cutpoint_core::harness::{
    read_depletion_csv, read_rankings_csv, read_report_csv, read_sweep_csv,
    read_training_log_csv,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cutpoint"))
}

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default_scenario.json")
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn cutpoint");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

/// The default scenario with batteries small enough for second-scale runs.
fn small_scenario(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(default_config()).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for uav in value["uavs"].as_array_mut().unwrap() {
        uav["battery_capacity_j"] = serde_json::json!(20_000.0);
    }
    let path = dir.join("scenario.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

#[test]
fn validate_profiles_reports_bundled_catalog() {
    let output = run_ok(bin().arg("validate-profiles"));
    let text = stdout(&output);
    assert!(text.contains("3 families, 6 versions, 24 cut points"), "{text}");
    assert!(text.contains("VGG/VGG19"), "{text}");
    assert!(text.contains("DenseNet/DenseNet161"), "{text}");
}

#[test]
fn validate_profiles_rejects_malformed_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let output = bin()
        .arg("validate-profiles")
        .arg("--profiles")
        .arg(&path)
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn oracle_writes_one_ranking_csv_per_channel() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_ok(
        bin()
            .arg("oracle")
            .arg("--config")
            .arg(default_config())
            .arg("--out")
            .arg(dir.path()),
    );
    let text = stdout(&output);
    assert!(text.contains("channel 8mbps"), "{text}");
    assert!(text.contains("channel 20mbps"), "{text}");
    for name in ["ranking_8mbps.csv", "ranking_20mbps.csv"] {
        let rows = read_rankings_csv(&dir.path().join(name)).unwrap();
        assert_eq!(rows.len(), 24, "{name} should rank the full catalog");
        // Rows are grouped by family, best score first within each group.
        for pair in rows.chunks(8) {
            assert!(pair.windows(2).all(|w| w[0].family != w[1].family
                || w[0].weighted_score >= w[1].weighted_score));
        }
    }
}

#[test]
fn sweep_writes_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        bin()
            .arg("sweep")
            .arg("--config")
            .arg(default_config())
            .arg("--out")
            .arg(dir.path())
            .arg("--grid")
            .arg("0,1"),
    );
    let rows = read_sweep_csv(&dir.path().join("sweep.csv")).unwrap();
    // 3 families x 2 channels x 3 axes x 2 grid points.
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|r| r.weight == 0.0 || r.weight == 1.0));
}

#[test]
fn train_then_eval_trained_policy() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_scenario(dir.path());
    let out = dir.path().join("run");

    let output = run_ok(
        bin()
            .arg("train")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--episodes")
            .arg("5")
            .arg("--seed")
            .arg("3"),
    );
    assert!(stdout(&output).contains("trained 5 episodes"));
    let checkpoint = out.join("checkpoint.json");
    assert!(checkpoint.is_file());
    let log = read_training_log_csv(&out.join("training_log.csv")).unwrap();
    assert_eq!(log.len(), 5);

    let report_path = dir.path().join("report.csv");
    let output = run_ok(
        bin()
            .arg("eval")
            .arg("--config")
            .arg(&config)
            .arg("--strategy")
            .arg("trained")
            .arg("--checkpoint")
            .arg(&checkpoint)
            .arg("--episodes")
            .arg("3")
            .arg("--out")
            .arg(&report_path),
    );
    assert!(stdout(&output).contains("vs local-only"));
    let reports = read_report_csv(&report_path).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].strategy, "TRAINED");
    assert_eq!(reports[0].episodes, 3);
    assert!(reports[0].slots > 0);
}

#[test]
fn eval_oracle_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_scenario(dir.path());
    let output = run_ok(
        bin()
            .arg("eval")
            .arg("--config")
            .arg(&config)
            .arg("--strategy")
            .arg("ORACLE")
            .arg("--episodes")
            .arg("2"),
    );
    let text = stdout(&output);
    assert!(text.contains("strategy                 ORACLE"), "{text}");
    assert!(text.contains("mean weighted reward"), "{text}");
}

#[test]
fn eval_rejects_unknown_strategy() {
    let output = bin()
        .arg("eval")
        .arg("--config")
        .arg(default_config())
        .arg("--strategy")
        .arg("NOPE")
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("NOPE"));
}

#[test]
fn eval_trained_requires_checkpoint() {
    let output = bin()
        .arg("eval")
        .arg("--config")
        .arg(default_config())
        .arg("--strategy")
        .arg("TRAINED")
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("--checkpoint"));
}

#[test]
fn battery_writes_depletion_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_scenario(dir.path());
    let out = dir.path().join("battery");
    let output = run_ok(
        bin()
            .arg("battery")
            .arg("--config")
            .arg(&config)
            .arg("--seeds")
            .arg("2")
            .arg("--out")
            .arg(&out)
            .arg("--traces"),
    );
    let text = stdout(&output);
    for level in ["high", "moderate", "low"] {
        assert!(text.contains(level), "{text}");
    }
    let depletion = read_depletion_csv(&out.join("depletion.csv")).unwrap();
    // 3 activity levels x 2 seeds x 3 devices.
    assert_eq!(depletion.len(), 18);
    assert!(out.join("battery_trace.csv").is_file());
}
