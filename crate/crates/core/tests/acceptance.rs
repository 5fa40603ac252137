//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so that the lines appear in order; exits nonzero on any FAIL.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use plateflow::invariants::{self, CheckResult};
use plateflow::io::{load_config, ExperimentConfig, Format};
use plateflow::scenario::{mms_study, regularity_study, run_scenario, wsu_study, WsuStudy};

const SEED: u64 = 20240601;

fn config(name: &str) -> ExperimentConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn within(limit: Duration, started: Instant, mut o: Outcome) -> Outcome {
    let el = started.elapsed();
    if el > limit {
        o.passed = false;
    }
    o.detail = format!("{} [{:.1?} of {:?}]", o.detail, el, limit);
    o
}

fn merge(checks: &[CheckResult]) -> Outcome {
    Outcome {
        passed: checks.iter().all(|c| c.passed),
        detail: checks.iter().map(|c| c.detail.clone()).collect::<Vec<_>>().join("; "),
    }
}

fn fail(e: impl std::fmt::Display) -> Outcome {
    Outcome {
        passed: false,
        detail: format!("error: {e}"),
    }
}

fn energy_inequality() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut passed = true;
    for name in ["free_decay.toml", "free_decay_damped.toml"] {
        let mut cfg = config(name);
        cfg.output.formats = vec![Format::Csv];
        let dir = tempfile::tempdir().expect("tempdir");
        match run_scenario(&cfg, dir.path()) {
            Ok(r) => {
                let v = r.value("violations").unwrap_or(f64::NAN);
                passed &= v == 0.0;
                parts.push(format!(
                    "alpha = {}: max gap {:.3e} vs tolerance {:.3e}",
                    cfg.model.alpha,
                    r.value("max_gap").unwrap_or(f64::NAN),
                    r.value("tolerance").unwrap_or(f64::NAN)
                ));
            }
            Err(e) => return fail(e),
        }
    }
    within(Duration::from_secs(60), t, Outcome {
        passed,
        detail: parts.join("; "),
    })
}

fn entropy_identity_and_positivity() -> Outcome {
    let t = Instant::now();
    let checks = invariants::entropy_identity(SEED, 100).and_then(|a| Ok(vec![a, invariants::entropy_positivity(SEED + 1, 10_000)?]));
    match checks {
        Ok(c) => within(Duration::from_secs(10), t, merge(&c)),
        Err(e) => fail(e),
    }
}

fn wsu_shadow(study: &WsuStudy, elapsed: Duration) -> Outcome {
    let sups: Vec<String> = study.pairs.iter().map(|p| format!("E({}|{}) = {:.3e}", p.coarse, p.fine, p.sup_entropy)).collect();
    let factors = study.reduction_factors();
    let o = Outcome {
        passed: !factors.is_empty() && factors.iter().all(|f| *f >= 2.0),
        detail: format!("{}; reduction per doubling {factors:.3?}", sups.join(", ")),
    };
    let limit = Duration::from_secs(300);
    Outcome {
        passed: o.passed && elapsed <= limit,
        detail: format!("{} [{elapsed:.1?} of {limit:?}]", o.detail),
    }
}

fn pressure_bounds() -> Outcome {
    let mut checks = Vec::new();
    for gamma in [1.5, 2.0, 3.0] {
        match invariants::pressure_bounds(gamma, 0.5, 2.0, 10) {
            Ok(c) => checks.push(c),
            Err(e) => return fail(e),
        }
    }
    merge(&checks)
}

fn relative_energy(study: &WsuStudy) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    let mut magnitudes = Vec::new();
    for p in &study.pairs {
        match &p.residual {
            Ok(s) => {
                passed &= s.passed();
                let mag = s.residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
                magnitudes.push(mag);
                parts.push(format!(
                    "{}/{}: max residual {:.3e}, max |residual| {:.3e}, tolerance {:.3e}",
                    p.coarse,
                    p.fine,
                    s.max_residual(),
                    mag,
                    s.tolerance
                ));
            }
            Err(e) => return fail(e),
        }
    }
    let shrinking = magnitudes.windows(2).all(|m| m[1] < m[0]);
    Outcome {
        passed: passed && shrinking && magnitudes.len() >= 2,
        detail: format!("{}; shrinking: {shrinking}", parts.join("; ")),
    }
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "energy inequality", energy_inequality()));
    results.push((2, "relative entropy identity and positivity", entropy_identity_and_positivity()));

    let t = Instant::now();
    let study = wsu_study(&config("wsu_refinement.toml"));
    let wsu_time = t.elapsed();
    results.push((
        3,
        "weak-strong uniqueness shadow",
        match &study {
            Ok(s) => wsu_shadow(s, wsu_time),
            Err(e) => fail(e),
        },
    ));
    results.push((4, "pressure potential bounds", pressure_bounds()));
    results.push((
        5,
        "density distance bound",
        invariants::density_distance(SEED + 2, 10_000).map_or_else(fail, |c| merge(&[c])),
    ));
    results.push((
        6,
        "ALE identities",
        invariants::ale_rest_identities(SEED + 3)
            .and_then(|a| Ok(vec![a, invariants::extension_divergence(&[16, 32, 64, 128])?]))
            .map_or_else(fail, |c| merge(&c)),
    ));
    results.push((
        7,
        "summation by parts",
        invariants::summation_by_parts(SEED + 4, 100).map_or_else(fail, |c| merge(&[c])),
    ));
    results.push((8, "threshold table", invariants::threshold_table(20).map_or_else(fail, |c| merge(&[c]))));

    let t = Instant::now();
    let scan = match regularity_study(&config("regularity_scan.toml")) {
        Ok((_, scan)) => match scan.ratio_for(0.25) {
            Some(r) => Outcome {
                passed: r <= 10.0,
                detail: format!(
                    "ratio at s = 0.25: {r:.4}; empirical threshold {:?} (theory 0.5)",
                    scan.threshold
                ),
            },
            None => fail("s = 0.25 missing from the shipped s_grid"),
        },
        Err(e) => fail(e),
    };
    results.push((9, "regularity scan", within(Duration::from_secs(120), t, scan)));

    let t = Instant::now();
    let mms = match mms_study(&config("forced_mms.toml")) {
        Ok(s) => Outcome {
            passed: s.min_order() >= 0.9,
            detail: format!("errors {:.3?}, orders {:.3?}", s.errors, s.orders),
        },
        Err(e) => fail(e),
    };
    results.push((10, "manufactured-solution convergence", within(Duration::from_secs(300), t, mms)));
    results.push((11, "plate potential and force", invariants::plate_consistency().map_or_else(fail, |c| merge(&[c]))));
    results.push((
        12,
        "relative energy residual",
        match &study {
            Ok(s) => relative_energy(s),
            Err(e) => fail(e),
        },
    ));

    let mut failed = 0;
    for (k, name, o) in &results {
        println!("{} {k:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
