use std::fs;

use plateflow::io::{parse_config, read_timeseries, Format};
use plateflow::scenario::{exit_code, initial_state, run_scenario, FAILURE_MARKER, RESOLVED_CONFIG};

fn decay(extra: &str) -> String {
    format!(
        "scenario = \"free_decay\"\n[grid]\nnx = 16\nnz = 8\n[scheme]\ndt = 5e-3\nt_end = 0.05\n\
         [output]\ncadence = 2\n{extra}"
    )
}

#[test]
fn equilibrium_stays_at_rest() {
    let cfg = parse_config(
        "scenario = \"equilibrium\"\n[grid]\nnx = 16\nnz = 8\n[model]\nalpha = 0.5\n\
         [scheme]\ndt = 1e-2\nt_end = 0.1\n[initial]\nrecipe = \"rest\"\ndensity = 1.3\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&cfg, dir.path()).unwrap();
    assert_eq!(report.value("max_deviation"), Some(0.0));
    let (_, rows) = read_timeseries(&dir.path().join("deviation.csv")).unwrap();
    assert!(rows.iter().flat_map(|r| &r[1..]).all(|v| *v == 0.0));
}

#[test]
fn runs_are_byte_identical() {
    let cfg = parse_config(&decay("")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&cfg, a.path()).unwrap();
    run_scenario(&cfg, b.path()).unwrap();
    for name in ["energy.csv", "budget.csv", "snapshots/snap_00002.txt", RESOLVED_CONFIG] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn energy_file_starts_with_the_initial_state() {
    let mut cfg = parse_config(&decay("")).unwrap();
    cfg.output.formats = vec![Format::Csv];
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&cfg, dir.path()).unwrap();
    assert_eq!(report.value("violations"), Some(0.0));
    let (header, rows) = read_timeseries(&dir.path().join("energy.csv")).unwrap();
    assert_eq!(header[0], "time");
    assert_eq!(rows[0][0], 0.0);
    assert!(!dir.path().join("snapshots").exists());
}

#[test]
fn collision_leaves_a_marker_and_exit_code() {
    let cfg = parse_config(&decay("[initial]\namplitude = 0.97\n")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let result = run_scenario(&cfg, dir.path());
    assert_eq!(exit_code(&result), 3, "{result:?}");
    assert!(dir.path().join(FAILURE_MARKER).exists());
    assert!(dir.path().join(RESOLVED_CONFIG).exists());
}

#[test]
fn clamped_profiles_satisfy_the_boundary_conditions() {
    for (nx, ny, mode) in [(8, 0, 1), (16, 0, 3), (12, 12, 2)] {
        let cfg = parse_config(&format!(
            "scenario = \"invariant_suite\"\n[grid]\nnx = {nx}\nny = {ny}\nnz = 4\ntopology = \"clamped\"\n\
             [params]\ngamma = 3\n[initial]\namplitude = 0.3\nmode = {mode}\n"
        ))
        .unwrap();
        let s = initial_state(&cfg).unwrap();
        assert!(s.plate.w.max_abs() > 0.1, "profile vanished on {nx}x{ny}");
    }
}
