//! End-to-end tests of the `pdgate` binary: exit codes, shipped presets,
//! override plumbing, and output artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdgate"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_config_accepts_every_shipped_preset() {
    let mut checked = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = bin()
                .args(["validate-config", "--config"])
                .arg(&path)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{} rejected: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            checked += 1;
        }
    }
    assert!(checked >= 7, "expected the full preset set, found {checked}");
}

#[test]
fn unknown_flag_prints_usage_and_exits_1() {
    let out = bin().args(["flip-scan", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage"), "stderr: {err}");
}

#[test]
fn missing_config_file_exits_1() {
    let out = bin()
        .args(["validate-config", "--config", "/nonexistent/nope.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(configs_dir().join("fig1e.toml")).unwrap();
    std::fs::write(&path, format!("{text}\n[extra_section]\nx = 1\n")).unwrap();
    let out = bin().args(["validate-config", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn initialization_failure_exits_2() {
    // valid schema, but no parametric drive: no period-doubled states exist
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dead.toml");
    let text = std::fs::read_to_string(configs_dir().join("fig2c.toml"))
        .unwrap()
        .replace("drive_amp = 0.5", "drive_amp = 0.0");
    std::fs::write(&path, text).unwrap();
    let out = bin()
        .args(["gate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gate_prints_four_row_truth_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gate", "--config"])
        .arg(configs_dir().join("fig2c.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    for inputs in ["(0, 0)", "(0, 1)", "(1, 0)", "(1, 1)"] {
        assert!(text.contains(inputs), "missing row {inputs} in:\n{text}");
    }
    assert!(text.contains("aggregate: Full"), "{text}");
    assert!(dir.path().join("fig2c.table.json").exists());
}

#[test]
fn set_override_is_applied_and_echoed_in_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["flip-scan", "--config"])
        .arg(configs_dir().join("fig1e.toml"))
        .args(["--set", "sweep.coupling.count=2", "--set", "sweep.Tq.count=3"])
        .args(["--set", "sweep.Tq.min=4.0", "--set", "sweep.Tq.max=6.0"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fig1e.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig1e.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["config"]["sweep"]["Tq"]["count"], 3);
    assert_eq!(meta["config"]["sweep"]["coupling"]["count"], 2);
}

#[test]
fn simulate_writes_trajectory_and_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(configs_dir().join("fig2c.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let traj = std::fs::read_to_string(dir.path().join("fig2c.trajectory.csv")).unwrap();
    let header = traj.lines().next().unwrap();
    assert_eq!(header, "t,site0,site1,site2,site3");
    assert!(traj.lines().count() > 100);
    let outcome: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig2c.outcome.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(outcome["outcome"]["classification"], "Full");
}

#[test]
fn seed_flag_overrides_the_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, prefix: &str| {
        let out = bin()
            .args(["flip-scan", "--config"])
            .arg(configs_dir().join("fig1e.toml"))
            .args(["--set", "sweep.coupling.count=2", "--set", "sweep.Tq.count=2"])
            .args(["--set", "sweep.Tq.min=4.0", "--set", "sweep.Tq.max=6.0"])
            .args(["--set", "model.dpo.t_tilde=1e-3"])
            .args(["--set", "integration.noise=true", "--set", "sweep.n_realizations=2"])
            .args(["--set", &format!("output.prefix={prefix}")])
            .args(["--seed", seed])
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_str::<serde_json::Value>(
            &std::fs::read_to_string(dir.path().join(format!("{prefix}.meta.json"))).unwrap(),
        )
        .unwrap()
    };
    let a = run("123", "a");
    assert_eq!(a["base_seed"], 123);
    let b = run("456", "b");
    assert_eq!(b["base_seed"], 456);
}
