//! End-to-end checks of the binary: exit codes, determinism of the CSV
//! artifacts, and the full-precision round trip.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fractel"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path
}

const CONSTANT_CONFIG: &str = r#"{
  "params": {"alpha": 0.8, "b": 1.0, "c": 1.0, "a1": 0.0, "a2": 1.0, "T": 1.0},
  "data": {"tau": ["1"], "phi1": "1", "phi2": "1", "f": "1"},
  "grid": {"nx": 4, "ny": 4},
  "fd_grid": {"nx": 16, "ny": 16}
}"#;

#[test]
fn invalid_alpha_exits_2_and_names_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"params": {"alpha": 2.5, "b": 0.0, "c": 0.0, "a1": 0.0, "a2": 1.0, "T": 1.0}}"#,
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("(0, 2)"), "message should name the bound: {msg}");
}

#[test]
fn missing_command_and_bad_expression_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT_CONFIG);
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let bad = write_config(
        dir.path(),
        r#"{
  "params": {"alpha": 0.8, "b": 1.0, "c": 1.0, "a1": 0.0, "a2": 1.0, "T": 1.0},
  "data": {"tau": ["sin x"], "phi1": "0", "phi2": "0", "f": "0"}
}"#,
    );
    let out = bin()
        .args(["oracle", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_runs_and_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT_CONFIG);
    let out = bin()
        .args(["oracle", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert!(csv.starts_with("x,y,value"));
    // Constant problem: every emitted value parses back to exactly 1.0
    for line in csv.lines().skip(1) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(v, 1.0);
    }
}

#[test]
fn identical_runs_produce_byte_identical_output() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let cfg = write_config(dir.path(), CONSTANT_CONFIG);
        let out = bin()
            .args(["oracle", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path())
            .arg("--threads")
            .arg("2")
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir_a.path().join("oracle.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("oracle.csv")).unwrap();
    assert_eq!(a, b, "oracle CSV must be byte-identical across runs");
}

#[test]
fn env_variable_supplies_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT_CONFIG);
    let out = bin()
        .arg("oracle")
        .env("FRACTEL_CONFIG", &cfg)
        .env("FRACTEL_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_constant_field_of_ones() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT_CONFIG);
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-3, "field value {v}");
    }
}

#[test]
fn identities_command_passes_at_default_params() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT_CONFIG);
    let out = bin()
        .args(["identities", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.matches("PASS").count() >= 12, "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
}
