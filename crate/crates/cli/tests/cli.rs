use std::path::Path;
use std::process::{Command, Output};

fn plateflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plateflow")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const DECAY: &str = "scenario = \"free_decay\"\n[grid]\nnx = 16\nnz = 8\n[scheme]\ndt = 5e-3\nt_end = 0.02\n";

#[test]
fn check_accepts_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = plateflow(&["check", &write_config(dir.path(), DECAY)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: free_decay"));
}

#[test]
fn unknown_key_exits_with_two_and_a_hint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{DECAY}colour = 1\n"));
    let out = plateflow(&["check", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour") && err.contains("docs/config.md"), "{err}");
}

#[test]
fn missing_file_exits_with_one() {
    assert_eq!(plateflow(&["run", "/nonexistent/run.toml"]).status.code(), Some(1));
}

#[test]
fn collision_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{DECAY}[initial]\namplitude = 0.97\n"));
    let out_dir = dir.path().join("out");
    let out = plateflow(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out_dir.join("FAILED").exists());
}

#[test]
fn run_then_compare_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DECAY);
    let out_dir = dir.path().join("out");
    let out = plateflow(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violations = 0"));
    let snap = |k: u32| out_dir.join(format!("snapshots/snap_{k:05}.txt")).to_string_lossy().into_owned();

    let same = plateflow(&["compare", &snap(0), &snap(0)]);
    assert!(same.status.success());
    assert!(String::from_utf8_lossy(&same.stdout).contains("total = 0.0000000000000000e0"));

    let diff = plateflow(&["compare", &snap(4), &snap(0)]);
    let text = String::from_utf8_lossy(&diff.stdout);
    let total: f64 = text.lines().find_map(|l| l.strip_prefix("total = ")).unwrap().parse().unwrap();
    assert!(total > 0.0, "{text}");
}

#[test]
fn check_rejects_grids_the_solver_cannot_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &DECAY.replace("nz = 8\n", "nz = 8\ntopology = \"clamped\"\n"));
    let out = plateflow(&["check", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("periodic"));
}
