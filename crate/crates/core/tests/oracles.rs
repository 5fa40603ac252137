use plateflow::coupling::CoupledState;
use plateflow::diagnostics::ENERGY_COLUMNS;
use plateflow::fluid::FluidParams;
use plateflow::io::{parse_config, parse_snapshot, snapshot_text, IoError, Scenario};
use plateflow::regularity::threshold_s;
use plateflow::{Error, Grid};

#[test]
fn threshold_worked_examples() {
    assert!((threshold_s(2.0, 2, false).unwrap() - 0.25).abs() < 1e-15);
    assert!((threshold_s(2.0, 3, true).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert!(threshold_s(1.5, 3, false).is_err());
}

#[test]
fn three_dimensional_low_gamma_config_is_rejected() {
    let src = "scenario = \"free_decay\"\n[grid]\nnx = 8\nnz = 4\nny = 8\n[params]\ngamma = 1.5\n";
    let err = parse_config(src).unwrap_err();
    assert!(matches!(err, IoError::Numerics(Error::InadmissibleGamma { .. })), "{err}");
}

#[test]
fn minimal_config_takes_documented_defaults() {
    let cfg = parse_config("scenario = \"equilibrium\"\n[grid]\nnx = 16\nnz = 8\n").unwrap();
    assert_eq!(cfg.scenario, Scenario::Equilibrium);
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.params.gamma, 2.0);
    assert_eq!(cfg.params.mu, 1.0);
    assert_eq!(cfg.model.alpha, 0.0);
    assert_eq!(cfg.scheme.dt, 2e-3);
    assert_eq!(cfg.output.cadence, 1);
    assert_eq!(cfg.wsu.levels, vec![32, 64, 128]);
}

#[test]
fn unknown_key_reports_its_line() {
    let err = parse_config("scenario = \"equilibrium\"\n[grid]\nnx = 16\nnz = 8\nwidth = 3\n").unwrap_err();
    match err {
        IoError::Parse { line, message } => {
            assert_eq!(line, 5);
            assert!(message.contains("width"), "{message}");
        }
        e => panic!("expected a parse error, got {e}"),
    }
}

#[test]
fn energy_header_is_stable() {
    assert_eq!(
        ENERGY_COLUMNS.join(","),
        "time,kinetic,internal,plate_kinetic,bending,viscous_dissipation_cum,plate_dissipation_cum,total"
    );
}

#[test]
fn snapshot_schema_is_checked() {
    let g = Grid::periodic(4, 4, 1.0).unwrap();
    let text = snapshot_text(&CoupledState::equilibrium(g, 1.0), &FluidParams::default());
    let bumped = text.replace("schema_version = 1", "schema_version = 2");
    assert!(matches!(parse_snapshot(&bumped), Err(IoError::Schema(_))));
    let cut = &text[..text.find("[w]").unwrap()];
    assert!(matches!(parse_snapshot(cut), Err(IoError::Truncated(_))));
    assert!(matches!(parse_snapshot("hello\n"), Err(IoError::Schema(_))));
}
