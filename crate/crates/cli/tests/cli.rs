//! End-to-end tests of the installed binary: exit codes, determinism,
//! file output and environment overrides.

use std::process::{Command, Output};

fn twistkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistkit"))
        .args(args)
        .env_remove("TWISTKIT_SEED")
        .env_remove("TWISTKIT_FORMAT")
        .env_remove("TWISTKIT_OUT")
        .env_remove("TWISTKIT_TIMING")
        .output()
        .expect("binary runs")
}

#[test]
fn usage_errors_exit_with_code_two() {
    for args in [
        &["verify", "nosuch"][..],
        &["verify", "floer", "--format", "xml"][..],
        &["table", "nosuch"][..],
        &["table", "actions", "--format", "xml"][..],
        &["table", "actions", "--r", "0"][..],
        &["table", "actions", "--r", "9"][..],
    ] {
        let out = twistkit(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
        assert!(out.stdout.is_empty(), "args {args:?}");
        assert!(!out.stderr.is_empty(), "args {args:?}");
    }
    // Unknown flags are rejected by the parser itself.
    let out = twistkit(&["verify", "floer", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_is_reproducible_for_a_fixed_seed() {
    let a = twistkit(&["verify", "floer", "--seed", "7", "--format", "json"]);
    let b = twistkit(&["verify", "floer", "--seed", "7", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).expect("valid json");
    assert_eq!(doc["suite"], "floer");
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["summary"]["failed"], 0);
    assert_eq!(doc["summary"]["inconclusive"], 0);
    assert!(doc["results"].as_array().map(Vec::len).unwrap_or(0) >= 5);
}

#[test]
fn text_reports_end_with_a_summary_line() {
    let out = twistkit(&["verify", "maslov"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).expect("utf-8");
    let last = text.lines().last().expect("nonempty");
    assert!(last.contains("passed"), "summary line, got {last:?}");
    assert!(text.lines().filter(|l| l.starts_with("[pass]")).count() >= 5);
}

#[test]
fn reports_can_be_written_to_a_file() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("report.json");
    let out = twistkit(&[
        "verify",
        "twist",
        "--format",
        "json",
        "--out",
        path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());

    let direct = twistkit(&["verify", "twist", "--format", "json"]);
    let written = std::fs::read(&path).expect("file written");
    assert_eq!(written, direct.stdout);
}

#[test]
fn unwritable_output_paths_exit_with_code_three() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("missing").join("report.json");
    let out = twistkit(&["table", "actions", "--out", path.to_str().expect("utf-8 path")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn table_formats_agree_on_content() {
    let csv = twistkit(&["table", "indices", "--r", "4", "--format", "csv"]);
    let md = twistkit(&["table", "indices", "--r", "4", "--format", "md"]);
    let json = twistkit(&["table", "indices", "--r", "4", "--format", "json"]);
    for out in [&csv, &md, &json] {
        assert_eq!(out.status.code(), Some(0));
    }
    let csv = String::from_utf8(csv.stdout).expect("utf-8");
    assert_eq!(csv.lines().next(), Some("j,morse_halves,index_prime,degree_low,degree_high"));
    assert_eq!(csv.lines().count(), 5);

    let md = String::from_utf8(md.stdout).expect("utf-8");
    assert!(md.starts_with("| j | morse_halves |"));

    let doc: serde_json::Value = serde_json::from_slice(&json.stdout).expect("valid json");
    assert_eq!(doc["kind"], "indices");
    assert_eq!(doc["r"], 4);
    assert_eq!(doc["rows"].as_array().map(Vec::len), Some(4));
}

#[test]
fn environment_sets_defaults_and_flags_win() {
    let from_env = Command::new(env!("CARGO_BIN_EXE_twistkit"))
        .args(["verify", "maslov", "--format", "json"])
        .env("TWISTKIT_SEED", "5")
        .output()
        .expect("binary runs");
    let doc: serde_json::Value = serde_json::from_slice(&from_env.stdout).expect("valid json");
    assert_eq!(doc["config"]["seed"], 5);

    let flag_wins = Command::new(env!("CARGO_BIN_EXE_twistkit"))
        .args(["verify", "maslov", "--format", "json", "--seed", "9"])
        .env("TWISTKIT_SEED", "5")
        .output()
        .expect("binary runs");
    let doc: serde_json::Value = serde_json::from_slice(&flag_wins.stdout).expect("valid json");
    assert_eq!(doc["config"]["seed"], 9);
}

#[test]
fn loosened_tolerances_are_recorded_in_the_report() {
    let out = twistkit(&[
        "verify",
        "twist",
        "--format",
        "json",
        "--tol-symplectic",
        "1e-4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid json");
    assert_eq!(doc["config"]["tolerances"]["symplectic"], 1e-4);
    let symplectic = doc["results"]
        .as_array()
        .expect("results")
        .iter()
        .find(|r| r["anchor"] == "twist.symplectic")
        .expect("symplectic check present");
    assert_eq!(symplectic["metrics"]["tolerance"], 1e-4);
}
