//! Command-line contract: exit codes, the resolved-config echo, strict
//! config validation, and the shape of the output files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;

fn sim() -> &'static str {
    env!("CARGO_BIN_EXE_fountain-sim")
}

fn write_config(dir: &Path, name: &str, value: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(sim())
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, subcommand: &str, config: &Path, out: &str) -> Output {
    run(&[
        subcommand,
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join(out).to_str().unwrap(),
    ])
}

fn small_fringe_config() -> serde_json::Value {
    json!({
        "schema_version": 1,
        "experiment": "fringe",
        "launch": { "apogee_above_cavity_m": 0.11, "n_atoms": 200 },
        "grid": { "span_hz": 6.0, "points": 80 }
    })
}

#[test]
fn happy_path_writes_outputs_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", small_fringe_config());
    let output = run_config(dir.path(), "fringe", &cfg, "run");
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let pattern = std::fs::read_to_string(dir.path().join("run_pattern.csv")).unwrap();
    let mut lines = pattern.lines();
    assert_eq!(lines.next().unwrap(), "detuning_hz,transition_probability");
    assert_eq!(lines.count(), 80, "one row per grid point");

    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_config.json")).unwrap())
            .unwrap();
    assert_eq!(echo["schema_version"], 1);
    assert_eq!(echo["experiment"], "fringe");
    assert_eq!(echo["seed"], 1, "default seed recorded");
    // The launch resolves to a concrete speed and materialized defaults.
    let launch = &echo["parameters"]["launch"];
    assert!(launch["launch_speed_mps"].as_f64().unwrap() > 1.0);
    assert_eq!(launch["cavity_height_m"], 0.040);
    assert_eq!(echo["parameters"]["detection"]["snr_cycles"], 10);
}

#[test]
fn unknown_config_key_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fringe_config();
    cfg["launch"]["beam_waist_m"] = json!(0.01);
    let path = write_config(dir.path(), "bad.json", cfg);
    let output = run_config(dir.path(), "fringe", &path, "bad");
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("beam_waist_m"),
        "names the offending key: {stderr}"
    );
}

#[test]
fn experiment_kind_mismatch_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mismatch.json", small_fringe_config());
    let output = run_config(dir.path(), "servo", &cfg, "mismatch");
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unsupported_schema_version_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fringe_config();
    cfg["schema_version"] = json!(7);
    let path = write_config(dir.path(), "schema.json", cfg);
    let output = run_config(dir.path(), "fringe", &path, "schema");
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn over_specified_launch_speed_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fringe_config();
    cfg["launch"]["launch_speed_mps"] = json!(3.0);
    let path = write_config(dir.path(), "two.json", cfg);
    let output = run_config(dir.path(), "fringe", &path, "two");
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "fringe",
        "--config",
        dir.path().join("absent.json").to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unreachable_cavity_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fringe_config();
    cfg["launch"] = json!({ "launch_speed_mps": 0.5, "n_atoms": 50 });
    let path = write_config(dir.path(), "low.json", cfg);
    let output = run_config(dir.path(), "fringe", &path, "low");
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("physics"),
        "physics error reported: {stderr}"
    );
}

#[test]
fn lost_lock_is_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "hot.json",
        json!({
            "schema_version": 1,
            "experiment": "servo",
            "launch": { "apogee_above_cavity_m": 0.11 },
            "servo": { "gain_hz": 40.0, "n_cycles": 200, "initial_offset_hz": 0.4 }
        }),
    );
    let output = run_config(dir.path(), "servo", &cfg, "hot");
    assert_eq!(output.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("lock lost"), "{stderr}");
}

#[test]
fn zero_gain_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.json",
        json!({
            "schema_version": 1,
            "experiment": "servo",
            "launch": { "apogee_above_cavity_m": 0.11 },
            "servo": { "gain_hz": 0.0, "n_cycles": 20 }
        }),
    );
    let output = run_config(dir.path(), "servo", &cfg, "zero");
    assert!(output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("warning"), "gain 0 warns: {stderr}");
}

#[test]
fn strengths_needs_no_config() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "strengths",
        "--out",
        dir.path().join("tables").to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let strengths = std::fs::read_to_string(dir.path().join("tables_strengths.csv")).unwrap();
    assert!(strengths.starts_with("f,m_f,q,f_prime,m_f_prime,strength\n"));
    assert!(dir.path().join("tables_branching.csv").exists());
    assert!(dir.path().join("tables_config.json").exists());
}

#[test]
fn transit_dump_covers_every_atom() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_fringe_config();
    cfg["dump_transits"] = json!(true);
    let path = write_config(dir.path(), "dump.json", cfg);
    let output = run_config(dir.path(), "fringe", &path, "dump");
    assert!(output.status.success());
    let transits = std::fs::read_to_string(dir.path().join("dump_transits.csv")).unwrap();
    assert_eq!(
        transits.lines().count(),
        201,
        "header plus one row per atom"
    );
}

#[test]
fn csv_floats_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rt.json", small_fringe_config());
    let output = run_config(dir.path(), "fringe", &cfg, "rt");
    assert!(output.status.success());
    let pattern = std::fs::read_to_string(dir.path().join("rt_pattern.csv")).unwrap();
    for line in pattern.lines().skip(1) {
        let cell = line.split(',').nth(1).unwrap();
        let value: f64 = cell.parse().unwrap();
        assert_eq!(
            format!("{value:.16e}"),
            cell,
            "17 significant digits round-trip"
        );
    }
}
