//! End-to-end tests of the `nlcomp` binary: exit codes, artifact schemas,
//! flag overrides and byte-level determinism of the reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlcomp"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn write_scenario(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Eight-node coexistence system with constant coefficients; converges in
/// a handful of periods, so every subcommand stays cheap.
const SMALL: &str = r#"
[grid]
dimension = 1
extents = [2.0]
nodes = [8]
regime = "periodic"

[kernel]
radius = 0.5
profile = "smooth_bump"

[system]
nu1 = 0.3
nu2 = 0.3
period = 1.0
a1 = "1 + 0.1*sin(2*pi*t/T)"
a2 = "1 + 0.1*sin(2*pi*t/T)"
b1 = 2.0
b2 = 1.0
c1 = 1.0
c2 = 2.0

[run]
dt = 0.002
orbit_samples = 16
simulate_periods = 2
store_every = 50
"#;

#[test]
fn simulate_writes_the_trajectory_schema() {
    let dir = TempDir::new().unwrap();
    let scenario = write_scenario(&dir, "small.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,node_index,x,u,v"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert_eq!(rows.len() % 8, 0, "rows must come in whole time slices");
    for (k, row) in rows.iter().enumerate() {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5, "bad row: {row}");
        assert_eq!(fields[1].parse::<usize>().unwrap(), k % 8);
        for f in &fields {
            f.parse::<f64>().expect("numeric field");
        }
    }

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("simulate.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "simulate");
    let digest = format!("{:x}", Sha256::digest(fs::read(&scenario).unwrap()));
    assert_eq!(report["scenario_sha256"], digest.as_str());
}

#[test]
fn spectrum_on_the_flat_growth_scenario_reports_zero() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "spectrum",
        "--scenario",
        bundled("zero_growth_spectrum.toml").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("spectrum.json")).unwrap()).unwrap();
    assert!(report["lambda"].as_f64().unwrap().abs() <= 1e-12);
    assert_eq!(report["classification"], "principal");
    assert_eq!(report["is_principal_eigenvalue"], true);
}

#[test]
fn unknown_keys_are_rejected_with_key_and_line() {
    let dir = TempDir::new().unwrap();
    let scenario = write_scenario(&dir, "bad.toml", &SMALL.replace("nu1 = 0.3", "wobble = 3\nnu1 = 0.3"));
    let out = run(&["simulate", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("wobble"), "stderr: {err}");
    assert!(err.contains("line"), "stderr: {err}");
}

#[test]
fn missing_scenario_flag_is_a_validation_error() {
    let out = run(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--scenario"));
}

#[test]
fn missing_planar_block_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let scenario = write_scenario(&dir, "small.toml", SMALL);
    let out = run(&["lemma31", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("[planar]"));
}

#[test]
fn oversized_dt_override_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let scenario = write_scenario(&dir, "small.toml", SMALL);
    let out = run(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--dt",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("run.dt"), "stderr: {}", stderr_of(&out));
}

#[test]
fn unresolved_runs_exit_with_the_numerical_code() {
    let dir = TempDir::new().unwrap();
    // Margins doom the second species, but two periods cannot resolve it.
    let scenario = write_scenario(
        &dir,
        "doomed.toml",
        &SMALL
            .replace("a1 = \"1 + 0.1*sin(2*pi*t/T)\"", "a1 = 2.0")
            .replace("a2 = \"1 + 0.1*sin(2*pi*t/T)\"", "a2 = 1.0")
            .replace("b1 = 2.0", "b1 = 1.0")
            .replace("c2 = 2.0", "c2 = 1.0"),
    );
    let out = run(&[
        "extinct",
        "--scenario",
        scenario.to_str().unwrap(),
        "--max-periods",
        "2",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("numerical"));
}

#[test]
fn verify_flags_control_seed_and_trials() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "verify",
        "--trials",
        "2",
        "--seed",
        "7",
        "--quiet",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["trials"], 2);
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 10);
}

#[test]
fn reports_are_byte_identical_across_repeat_runs() {
    let dir = TempDir::new().unwrap();
    let scenario = write_scenario(&dir, "small.toml", SMALL);
    for (command, artifacts) in [
        ("criteria", &["criteria.json"][..]),
        ("simulate", &["simulate.json", "trajectory.csv"][..]),
    ] {
        let mut emitted: Vec<Vec<Vec<u8>>> = Vec::new();
        for run_dir in ["first", "second"] {
            let out_dir = dir.path().join(run_dir).join(command);
            let out = run(&[
                command,
                "--scenario",
                scenario.to_str().unwrap(),
                "--quiet",
                "--out",
                out_dir.to_str().unwrap(),
            ]);
            assert!(out.status.success(), "stderr: {}", stderr_of(&out));
            emitted.push(
                artifacts
                    .iter()
                    .map(|name| fs::read(out_dir.join(name)).unwrap())
                    .collect(),
            );
        }
        assert_eq!(emitted[0], emitted[1], "{command} artifacts must not drift");
    }
}

#[test]
fn orbit_csv_has_slices_times_nodes_rows() {
    let dir = TempDir::new().unwrap();
    let scenario = write_scenario(&dir, "small.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "periodic",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let csv = fs::read_to_string(out_dir.join("orbit.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("slice,t,node_index,x,u,v"));
    assert_eq!(lines.count(), 16 * 8, "16 slices of 8 nodes");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("periodic.json")).unwrap()).unwrap();
    assert_eq!(report["coincide"], true);
}

#[test]
fn quiet_suppresses_the_status_line() {
    let dir = TempDir::new().unwrap();
    let scenario = write_scenario(&dir, "small.toml", SMALL);
    let out = run(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--quiet",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "stdout: {:?}", String::from_utf8_lossy(&out.stdout));
}
