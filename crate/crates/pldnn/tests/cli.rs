//! End-to-end checks of the command-line binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn pldnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pldnn"))
        .args(args)
        .env_remove("PLDNN_THETA")
        .output()
        .unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn train_h2so4(dir: &Path) -> PathBuf {
    let net = dir.join("h2so4.json");
    let out = pldnn(&[
        "train",
        "--log",
        data("h2so4.log").to_str().unwrap(),
        "--output",
        net.to_str().unwrap(),
        "--report",
    ]);
    assert!(out.status.success(), "{out:?}");
    net
}

#[test]
fn train_reports_convergence_json() {
    let dir = tempfile::tempdir().unwrap();
    let net = train_h2so4(dir.path());
    assert!(net.exists());
    let out = pldnn(&[
        "train",
        "--log",
        data("h2so4.log").to_str().unwrap(),
        "--report",
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["converged"], serde_json::json!(true));
    assert_eq!(report["transitions"], serde_json::json!(3));
}

#[test]
fn reason_prints_predicted_labels() {
    let dir = tempfile::tempdir().unwrap();
    let net = train_h2so4(dir.path());
    let out = pldnn(&[
        "reason",
        "--network",
        net.to_str().unwrap(),
        "--event",
        "+SO2,+O2",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "SO3");

    let out = pldnn(&[
        "reason",
        "--network",
        net.to_str().unwrap(),
        "--event",
        "+SO2,+O2",
        "--mode",
        "prob",
        "--theta",
        "0.5",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "SO3");
}

#[test]
fn eval_exits_zero_on_complete_recall() {
    let dir = tempfile::tempdir().unwrap();
    let net = train_h2so4(dir.path());
    let out = pldnn(&[
        "eval",
        "--network",
        net.to_str().unwrap(),
        "--log",
        data("h2so4.log").to_str().unwrap(),
        "--report",
    ]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["fraction"], serde_json::json!("1/1"));
}

#[test]
fn extract_includes_negated_rule() {
    let dir = tempfile::tempdir().unwrap();
    let net = train_h2so4(dir.path());
    let out = pldnn(&["extract", "--network", net.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("IF FeS2 AND O2 THEN NOT SO3"),
        "extracted:\n{text}"
    );
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let net = train_h2so4(dir.path());
    let dot = pldnn(&["export", "--network", net.to_str().unwrap()]);
    assert!(dot.status.success());
    assert!(stdout(&dot).starts_with("digraph pldnn"));

    let json = pldnn(&[
        "export",
        "--network",
        net.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(stdout(&json), std::fs::read_to_string(&net).unwrap());
}

#[test]
fn merge_trains_replay_and_saves() {
    let dir = tempfile::tempdir().unwrap();
    let log = data("h2so4.log");
    let half_a = dir.path().join("a.json");
    let half_b = dir.path().join("b.json");
    // Same log for both halves: union plus replay must still converge.
    for half in [&half_a, &half_b] {
        let out = pldnn(&[
            "train",
            "--log",
            log.to_str().unwrap(),
            "--output",
            half.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let merged = dir.path().join("merged.json");
    let out = pldnn(&[
        "merge",
        half_a.to_str().unwrap(),
        half_b.to_str().unwrap(),
        "--replay",
        log.to_str().unwrap(),
        "--output",
        merged.to_str().unwrap(),
        "--report",
    ]);
    assert!(out.status.success(), "{out:?}");
    let eval = pldnn(&[
        "eval",
        "--network",
        merged.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert!(eval.status.success());
}

#[test]
fn rules_train_and_chain() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("animals.json");
    let out = pldnn(&[
        "train",
        "--rules",
        data("animals.rules").to_str().unwrap(),
        "--output",
        net.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let out = pldnn(&[
        "reason",
        "--network",
        net.to_str().unwrap(),
        "--event",
        "+hair,+predator,+yellow,+spots",
        "--chain",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().any(|l| l == "leopard"));
}

#[test]
fn usage_errors_exit_two() {
    let out = pldnn(&["train"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let out = pldnn(&["reason", "--network", "/nonexistent.json", "--event", "+a"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pldnn(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}
