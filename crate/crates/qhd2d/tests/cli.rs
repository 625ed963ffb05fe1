//! End-to-end checks of the command-line surface: exit codes, file outputs
//! and run-to-run determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_qhd2d")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("qhd2d_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_RUN: &str = "\
[grid]
nx = 32
ny = 32

[time]
dt = 0.005
tau = 0.05
t_max = 0.1
collision_on = true

[output]
cadence = 5
";

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let out = Command::new(bin()).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("usage"), "{err}");
}

#[test]
fn missing_config_exits_one_naming_the_path() {
    let out = Command::new(bin())
        .args(["run", "--config", "missing.cfg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.cfg"), "{err}");
}

#[test]
fn invalid_config_exits_one() {
    let dir = tmp_dir("invalid");
    let cfg = write_cfg(&dir, "[time]\ndt = 0.01\ntau = 0.001\n");
    let out = Command::new(bin())
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let dir = tmp_dir("determinism");
    let cfg = write_cfg(&dir, SMALL_RUN);
    for sub in ["a", "b"] {
        let out_dir = dir.join(sub);
        let out = Command::new(bin())
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out_dir.join("diagnostics.csv").exists());
        assert!(out_dir.join("strips.csv").exists());
        assert!(out_dir.join("resolved.cfg").exists());
    }
    let a = std::fs::read(dir.join("a/diagnostics.csv")).unwrap();
    let b = std::fs::read(dir.join("b/diagnostics.csv")).unwrap();
    assert_eq!(a, b, "repeated runs must emit bit-identical CSV");
    let a = std::fs::read(dir.join("a/strips.csv")).unwrap();
    let b = std::fs::read(dir.join("b/strips.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn overrides_reach_the_resolved_config() {
    let dir = tmp_dir("overrides");
    let cfg = write_cfg(&dir, SMALL_RUN);
    let out_dir = dir.join("out");
    let out = Command::new(bin())
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--grid.nx=16")
        .arg("--grid.ny=16")
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let resolved = std::fs::read_to_string(out_dir.join("resolved.cfg")).unwrap();
    assert!(resolved.contains("nx = 16"), "{resolved}");
}

#[test]
fn env_var_is_the_out_dir_fallback() {
    let dir = tmp_dir("envvar");
    let cfg = write_cfg(&dir, SMALL_RUN);
    let out_dir = dir.join("from_env");
    let out = Command::new(bin())
        .args(["collisionless", "--config"])
        .arg(&cfg)
        .env("QHD2D_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out_dir.join("diagnostics.csv").exists());
}

#[test]
fn tau_study_writes_a_table() {
    let dir = tmp_dir("taustudy");
    let cfg = write_cfg(
        &dir,
        "[grid]\nnx = 32\nny = 32\nlx = 12.566370614359172\nly = 12.566370614359172\n\
         [time]\ndt = 0.0025\ntau = 0.1\nt_max = 0.2\ncollision_on = true\n\
         [ic]\nname = gaussian\nwidth = 1.5\namp = 0.5\n",
    );
    let out_dir = dir.join("out");
    let out = Command::new(bin())
        .args(["tau-study", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--taus", "0.1,0.05", "--jobs", "2"])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read_to_string(out_dir.join("tau_study.csv")).unwrap();
    assert!(table.starts_with("tau,rho_diff,j_diff,order_est"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn verify_passes_on_the_builtin_states() {
    let out = Command::new(bin()).arg("verify").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stdout:\n{stdout}\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("PASS null form (vortex)"), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn poisson_bench_reports_agreement() {
    let out = Command::new(bin())
        .args(["poisson-bench", "--n", "32"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max abs diff"), "{stdout}");
}
