use plateflow::coupling::{step, CoupledState, SchemeConfig};
use plateflow::diagnostics::relative_entropy;
use plateflow::fluid::{pressure_potential, FluidParams};
use plateflow::invariants::{random_state, rng};
use plateflow::io::{parse_config, parse_snapshot, snapshot_text};
use plateflow::plate::PlateModel;
use plateflow::regularity::{regularity_scan, summation_by_parts_residual, threshold_s};
use plateflow::scenario::interpolate_state;
use plateflow::{Grid, PlateField};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::periodic(8, 4, 2.0 * std::f64::consts::PI).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snapshot_round_trip_is_bitwise(seed in any::<u64>(), gamma in 1.01f64..4.0) {
        let s = random_state(&mut rng(seed), &grid(), 0.0, 3.0);
        let params = FluidParams::new(gamma, 1.0, 0.0).unwrap();
        let back = parse_snapshot(&snapshot_text(&s, &params)).unwrap();
        prop_assert_eq!(back.params, params);
        prop_assert_eq!(back.state, s);
    }

    #[test]
    fn relative_entropy_is_nonnegative(seed in any::<u64>(), gamma in 1.05f64..4.0) {
        let mut r = rng(seed);
        let s1 = random_state(&mut r, &grid(), 0.0, 5.0);
        let s2 = random_state(&mut r, &grid(), 0.01, 5.0);
        let params = FluidParams::new(gamma, 1.0, 0.0).unwrap();
        let e = relative_entropy(&s1, &s2, &params, &PlateModel::linear(0.0)).unwrap();
        prop_assert!(e.total >= 0.0);
        prop_assert!(e.pressure_gap >= 0.0 && e.fluid_kinetic_gap >= 0.0);
        let same = relative_entropy(&s2, &s2, &params, &PlateModel::linear(0.0)).unwrap();
        prop_assert_eq!(same.total, 0.0);
    }

    #[test]
    fn pressure_potential_vanishes_only_on_the_diagonal(x in 0.0f64..10.0, y in 0.1f64..5.0, gamma in 1.05f64..4.0) {
        let f = pressure_potential(x, y, gamma).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert_eq!(pressure_potential(y, y, gamma).unwrap(), 0.0);
        if (x - y).abs() > 1e-3 * y {
            prop_assert!(f > 0.0);
        }
    }

    #[test]
    fn threshold_is_monotone_in_gamma(a in 1.8f64..10.0, b in 1.8f64..10.0, d in 2usize..=3, alpha in any::<bool>()) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(threshold_s(lo, d, alpha).unwrap() <= threshold_s(hi, d, alpha).unwrap());
        prop_assert!(threshold_s(hi, d, alpha).unwrap() <= 0.5);
    }

    #[test]
    fn summation_by_parts_holds(seed in any::<u64>(), s in 0.01f64..0.99, m in 1usize..16) {
        use rand::Rng;
        let g = Grid::periodic(16, 4, 3.0).unwrap();
        let mut r = rng(seed);
        let f = PlateField::new(g, (0..16).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let h = PlateField::new(g, (0..16).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let res = summation_by_parts_residual(&f, &h, s, m as f64 * g.hx()).unwrap();
        prop_assert!(res < 1e-10, "residual {}", res);
    }

    #[test]
    fn scan_ratios_are_at_least_one(amp in -0.3f64..0.3, k in 1usize..5) {
        let g = Grid::periodic(32, 4, 2.0 * std::f64::consts::PI).unwrap();
        let w: Vec<PlateField> = (0..3)
            .map(|n| PlateField::from_fn(g, |x, _| amp * (k as f64 * x + n as f64).sin()))
            .collect();
        let hs: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|m| m * g.hx()).collect();
        let scan = regularity_scan(&[0.0, 0.1, 0.2], &w, &[0.25, 0.5], &hs, 10.0).unwrap();
        for r in &scan.ratios {
            prop_assert!(*r >= 1.0);
        }
        prop_assert!(scan.norms.iter().flatten().all(|n| *n >= 0.0));
    }

    #[test]
    fn one_step_conserves_mass(seed in any::<u64>()) {
        let s0 = random_state(&mut rng(seed), &grid(), 0.8, 1.2);
        let mut s = s0.clone();
        // small plate data keeps the step well inside the admissible set
        s.plate.w = s0.plate.w.map(|w| 0.1 * w);
        s.plate.v = s0.plate.v.map(|v| 0.1 * v);
        let s = CoupledState::new(s.fluid, s.plate, 0.0).unwrap();
        let cfg = SchemeConfig::new(1e-3, 1e-3);
        let next = step(&s, &cfg, &FluidParams::default(), &PlateModel::linear(0.5)).unwrap();
        prop_assert!((next.mass() - s.mass()).abs() <= 1e-11 * s.mass());
    }

    #[test]
    fn resolved_config_parses_back(gamma in 1.1f64..4.0, alpha in 0.0f64..2.0, nx in 4usize..64) {
        let src = format!(
            "scenario = \"free_decay\"\n[grid]\nnx = {nx}\nnz = 4\n[params]\ngamma = {gamma}\n[model]\nalpha = {alpha}\n"
        );
        let cfg = parse_config(&src).unwrap();
        prop_assert_eq!(parse_config(&cfg.resolved_toml()).unwrap(), cfg);
    }
}

#[test]
fn interpolating_a_rest_state_keeps_it_at_rest() {
    let coarse = Grid::periodic(8, 4, 2.0).unwrap();
    let fine = Grid::periodic(16, 8, 2.0).unwrap();
    let s = interpolate_state(&CoupledState::equilibrium(coarse, 1.7), &fine).unwrap();
    assert_eq!(s, CoupledState::equilibrium(fine, 1.7));
}
