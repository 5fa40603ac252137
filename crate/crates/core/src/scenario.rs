//! Scenario orchestration: builds the run from a configuration, executes it and
//! writes the artifact bundle.

use std::fs;
use std::path::{Path, PathBuf};

use crate::coupling::{run_from, run_with, validate_initial_data, CoupledState, Forcing, InitialData, Trajectory};
use crate::diagnostics::{
    energy_budget, relative_energy_residual, relative_entropy, EnergyBudget, EntropyReport, RelativeEnergySeries,
    ENERGY_COLUMNS,
};
use crate::error::Error;
use crate::geometry::interpolate_plate;
use crate::grid::{Grid, PlateField, ScalarField, Topology, VectorField};
use crate::io::{
    write_snapshot, write_timeseries, ExperimentConfig, Format, IoError, IoResult, Recipe, Scenario,
};
use crate::mms::{convergence_study, ConvergenceStudy, Manufactured};
use crate::plate::PlateModel;
use crate::regularity::{regularity_scan, threshold_s, RegularityScan};
use crate::spectral::trig_interpolate;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const FAILURE_MARKER: &str = "FAILED";

pub const ENTROPY_COLUMNS: [&str; 8] = [
    "time",
    "fluid_kinetic_gap",
    "pressure_gap",
    "plate_velocity_gap",
    "bending_gap",
    "thermal_gap",
    "quasilinear_gap",
    "total",
];

/// Process exit code for a scenario outcome.
pub fn exit_code(result: &IoResult<ScenarioReport>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(IoError::Numerics(Error::Collision { .. })) => 3,
        Err(IoError::Numerics(
            Error::Divergence(_)
            | Error::SolverBreakdown(_)
            | Error::NegativeDensity { .. }
            | Error::Vacuum { .. }
            | Error::NonFinite { .. },
        )) => 4,
        Err(IoError::File { .. }) => 1,
        Err(_) => 2,
    }
}

/// What a scenario wrote and a few headline numbers.
#[derive(Debug, Clone, Default)]
pub struct ScenarioReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<(String, f64)>,
}

impl ScenarioReport {
    pub fn value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Constant load −ρ^γ balancing the rest pressure on the plate.
#[derive(Debug, Clone, Copy)]
pub struct RestLoad {
    pub pressure: f64,
}

impl Forcing for RestLoad {
    fn momentum(&self, _: f64, g: &Grid) -> Vec<f64> {
        vec![0.0; g.dim() * g.fluid_len()]
    }
    fn mass(&self, _: f64, g: &Grid) -> Vec<f64> {
        vec![0.0; g.fluid_len()]
    }
    fn plate(&self, _: f64, g: &Grid) -> Vec<f64> {
        vec![-self.pressure; g.plate_len()]
    }
}

/// The analytic profile of the initial recipes: sine on periodic plates,
/// sin² on clamped ones, stretched over [2h, l − 2h] so that the value and the
/// second-order one-sided slope vanish at the edge nodes.
fn profile(g: &Grid, mode: usize) -> impl Fn(f64, f64) -> f64 {
    let (lx, ly, ny, periodic) = (g.lx, g.ly, g.ny, g.topology == Topology::Periodic);
    let (hx, hy) = (g.hx(), if ny == 0 { 0.0 } else { g.hy() });
    let m = mode as f64;
    let tau = 2.0 * std::f64::consts::PI;
    let bump = move |t: f64, h: f64, l: f64| {
        if t <= 2.0 * h || t >= l - 2.0 * h {
            0.0
        } else {
            (0.5 * tau * m * (t - 2.0 * h) / (l - 4.0 * h)).sin().powi(2)
        }
    };
    move |x, y| {
        let fx = if periodic { (tau * m * x / lx).sin() } else { bump(x, hx, lx) };
        let fy = match (ny, periodic) {
            (0, _) => 1.0,
            (_, true) => (tau * m * y / ly).cos(),
            (_, false) => bump(y, hy, ly),
        };
        fx * fy
    }
}

/// Initial data of the configured recipe on `g`.
pub fn initial_data(cfg: &ExperimentConfig, g: &Grid, model: &PlateModel) -> crate::Result<InitialData> {
    let ic = &cfg.initial;
    if ic.recipe == Recipe::Manufactured {
        let m = manufactured(cfg);
        return m.initial_data(g);
    }
    let f = profile(g, ic.mode);
    let amp = if ic.recipe == Recipe::Rest { 0.0 } else { ic.amplitude };
    let vel = if ic.recipe == Recipe::Rest { 0.0 } else { ic.velocity };
    let theta0 = model
        .is_thermal()
        .then(|| PlateField::from_fn(*g, |x, y| ic.theta * f(x, y)));
    Ok(InitialData {
        rho0: ScalarField::constant(*g, ic.density),
        momentum0: VectorField::zeros(*g),
        w0: PlateField::from_fn(*g, |x, y| amp * f(x, y)),
        v0: PlateField::from_fn(*g, |x, y| vel * f(x, y)),
        theta0,
    })
}

fn manufactured(cfg: &ExperimentConfig) -> Manufactured {
    Manufactured {
        params: cfg.params,
        alpha: cfg.model.alpha,
        ..Manufactured::default()
    }
}

fn rest_load(cfg: &ExperimentConfig) -> Option<RestLoad> {
    (cfg.initial.recipe == Recipe::Rest).then(|| RestLoad {
        pressure: cfg.initial.density.powf(cfg.params.gamma),
    })
}

/// Runs the configured problem on `g` with time step `dt` and snapshot stride `every`.
fn simulate(cfg: &ExperimentConfig, g: &Grid, dt: f64, every: usize) -> crate::Result<(Trajectory, Option<Error>)> {
    let model = cfg.model.build(g)?;
    let data = initial_data(cfg, g, &model)?;
    let mut scheme = cfg.scheme;
    scheme.dt = dt;
    scheme.snapshot_every = every;
    let hold = rest_load(cfg);
    let mms = (cfg.initial.recipe == Recipe::Manufactured).then(|| manufactured(cfg));
    let forcing: Option<&dyn Forcing> = match (&hold, &mms) {
        (Some(h), _) => Some(h),
        (_, Some(m)) => Some(m),
        _ => None,
    };
    let out = run_with(&data, &scheme, &cfg.params, &model, forcing)?;
    Ok((out.trajectory, out.error))
}

/// Coarse state carried to a finer grid over the same domain.
///
/// Plate fields use trigonometric interpolation on periodic plates and
/// piecewise-linear otherwise; fluid fields are bilinear in (X, z). The wall
/// rows are then reset so that U = 0 at the bottom and U = (0, v) on top.
pub fn interpolate_state(s: &CoupledState, target: &Grid) -> crate::Result<CoupledState> {
    let g = *s.grid();
    if g.dim() != 2 || target.dim() != 2 {
        return Err(Error::Unsupported("state interpolation for a three-dimensional fluid".into()));
    }
    if g.topology != target.topology || (g.lx - target.lx).abs() > 1e-12 * g.lx {
        return Err(Error::GridMismatch("interpolation needs the same domain and topology".into()));
    }
    let plate = |f: &PlateField| -> crate::Result<PlateField> {
        if g.topology == Topology::Periodic {
            trig_interpolate(f, target)
        } else {
            Ok(PlateField::from_fn(*target, |x, _| interpolate_plate(f, &[x])))
        }
    };
    let w = plate(&s.plate.w)?;
    let v = plate(&s.plate.v)?;
    let theta = s.plate.theta.as_ref().map(plate).transpose()?;
    let periodic = g.topology == Topology::Periodic;
    let n_plate = g.plate_nx();
    let bilinear = |vals: &[f64], x: f64, z: f64| -> f64 {
        let sx = x / g.hx();
        let (i0, i1, tx) = if periodic {
            let b = sx.floor();
            let i0 = (b as isize).rem_euclid(n_plate as isize) as usize;
            (i0, (i0 + 1) % n_plate, sx - b)
        } else {
            let sx = sx.clamp(0.0, (n_plate - 1) as f64);
            let i0 = (sx.floor() as usize).min(n_plate - 2);
            (i0, i0 + 1, sx - i0 as f64)
        };
        let sz = ((z + 1.0) / g.hz()).clamp(0.0, g.nz as f64);
        let j0 = (sz.floor() as usize).min(g.nz - 1);
        let tz = sz - j0 as f64;
        let at = |i: usize, j: usize| vals[g.node(i, j)];
        (1.0 - tz) * ((1.0 - tx) * at(i0, j0) + tx * at(i1, j0)) + tz * ((1.0 - tx) * at(i0, j0 + 1) + tx * at(i1, j0 + 1))
    };
    let r = ScalarField::from_fn(*target, |x, _, z| bilinear(s.fluid.r.values(), x, z));
    let mut u: Vec<Vec<f64>> = (0..2)
        .map(|c| {
            ScalarField::from_fn(*target, |x, _, z| bilinear(s.fluid.u.comp(c), x, z)).into_values()
        })
        .collect();
    for ip in 0..target.plate_len() {
        let (bottom, top) = (target.node(ip, 0), target.node(ip, target.nz));
        for comp in u.iter_mut() {
            comp[bottom] = 0.0;
            comp[top] = 0.0;
        }
        u[1][top] = v.values()[ip];
    }
    let fluid = crate::fluid::FluidState::new(r, VectorField::new(*target, u)?)?;
    CoupledState::new(fluid, crate::plate::PlateState { w, v, theta }, s.time)
}

/// One coarse/fine comparison of the refinement study.
#[derive(Debug, Clone)]
pub struct WsuPair {
    pub coarse: usize,
    pub fine: usize,
    pub times: Vec<f64>,
    pub entropy: Vec<EntropyReport>,
    pub sup_entropy: f64,
    /// Relative energy inequality of the interpolated coarse run against the fine one.
    pub residual: Result<RelativeEnergySeries, String>,
}

#[derive(Debug, Clone)]
pub struct WsuStudy {
    pub levels: Vec<usize>,
    pub pairs: Vec<WsuPair>,
}

impl WsuStudy {
    /// sup E of each pair divided by that of the next finer pair.
    pub fn reduction_factors(&self) -> Vec<f64> {
        self.pairs.windows(2).map(|p| p[0].sup_entropy / p[1].sup_entropy).collect()
    }
}

/// The same initial data at every level of `cfg.wsu.levels`, dt ∝ hx, compared
/// pairwise after interpolating the coarse run to the finer grid.
pub fn wsu_study(cfg: &ExperimentConfig) -> IoResult<WsuStudy> {
    let levels = cfg.wsu.levels.clone();
    let n0 = levels[0];
    let runs: Vec<crate::Result<(Trajectory, Option<Error>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&n| {
                scope.spawn(move || {
                    let factor = n / n0;
                    let g = cfg.grid.with_nx(n).build()?;
                    simulate(cfg, &g, cfg.scheme.dt / factor as f64, cfg.scheme.snapshot_every * factor)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("level thread")).collect()
    });
    let mut trajs = Vec::with_capacity(runs.len());
    for r in runs {
        let (traj, err) = r?;
        if let Some(e) = err {
            return Err(e.into());
        }
        trajs.push(traj);
    }
    let mut pairs = Vec::new();
    for k in 0..levels.len() - 1 {
        let fine = &trajs[k + 1];
        let target = *fine.snapshots[0].grid();
        let model = cfg.model.build(&target)?;
        let coarse = Trajectory {
            snapshots: trajs[k]
                .snapshots
                .iter()
                .map(|s| interpolate_state(s, &target))
                .collect::<crate::Result<_>>()?,
        };
        if coarse.len() != fine.len() {
            return Err(Error::Desynchronized {
                index: coarse.len().min(fine.len()),
                t1: coarse.last().map_or(f64::NAN, |s| s.time),
                t2: fine.last().map_or(f64::NAN, |s| s.time),
            }
            .into());
        }
        let entropy = coarse
            .snapshots
            .iter()
            .zip(&fine.snapshots)
            .map(|(a, b)| relative_entropy(a, b, &cfg.params, &model))
            .collect::<crate::Result<Vec<_>>>()?;
        let sup_entropy = entropy.iter().map(|e| e.total).fold(0.0, f64::max);
        let residual = relative_energy_residual(&coarse, fine, &cfg.params, &model).map_err(|e| e.to_string());
        pairs.push(WsuPair {
            coarse: levels[k],
            fine: levels[k + 1],
            times: fine.times(),
            entropy,
            sup_entropy,
            residual,
        });
    }
    Ok(WsuStudy { levels, pairs })
}

/// A run of the configured problem followed by the regularity scan of its plate.
pub fn regularity_study(cfg: &ExperimentConfig) -> IoResult<(Trajectory, RegularityScan)> {
    let g = cfg.grid.build()?;
    let (traj, err) = simulate(cfg, &g, cfg.scheme.dt, cfg.scheme.snapshot_every)?;
    if let Some(e) = err {
        return Err(e.into());
    }
    let ws: Vec<PlateField> = traj.snapshots.iter().map(|s| s.plate.w.clone()).collect();
    let hs: Vec<f64> = cfg.scan.h_decades.iter().map(|m| *m as f64 * g.hx()).collect();
    let scan = regularity_scan(&traj.times(), &ws, &cfg.scan.s_grid, &hs, cfg.scan.ratio_bound)?;
    Ok((traj, scan))
}

/// Executes the scenario and writes its outputs under `dir`.
///
/// The resolved configuration is written first; on failure a marker file
/// holding the error is left next to whatever was already flushed.
pub fn run_scenario(cfg: &ExperimentConfig, dir: &Path) -> IoResult<ScenarioReport> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let marker = dir.join(FAILURE_MARKER);
    if marker.exists() {
        let _ = fs::remove_file(&marker);
    }
    let mut report = ScenarioReport::default();
    let cfg_path = dir.join(RESOLVED_CONFIG);
    fs::write(&cfg_path, cfg.resolved_toml()).map_err(|source| IoError::File {
        path: cfg_path.clone(),
        source,
    })?;
    report.files.push(cfg_path);
    let result = match cfg.scenario {
        Scenario::Equilibrium => equilibrium(cfg, dir, &mut report),
        Scenario::FreeDecay => free_decay(cfg, dir, &mut report),
        Scenario::ForcedMms => forced_mms(cfg, dir, &mut report),
        Scenario::WsuRefinement => wsu(cfg, dir, &mut report),
        Scenario::RegularityScan => scan(cfg, dir, &mut report),
        Scenario::InvariantSuite => invariant_suite(cfg, dir, &mut report),
    };
    match result {
        Ok(()) => Ok(report),
        Err(e) => {
            let _ = fs::write(&marker, format!("{e}\n"));
            Err(e)
        }
    }
}

fn wants(cfg: &ExperimentConfig, f: Format) -> bool {
    cfg.output.formats.contains(&f)
}

fn emit_series(
    cfg: &ExperimentConfig,
    report: &mut ScenarioReport,
    path: PathBuf,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> IoResult<()> {
    if wants(cfg, Format::Csv) {
        write_timeseries(&path, columns, rows)?;
        report.files.push(path);
    }
    Ok(())
}

fn emit_snapshots(cfg: &ExperimentConfig, dir: &Path, traj: &Trajectory, report: &mut ScenarioReport) -> IoResult<()> {
    if !wants(cfg, Format::Snapshot) {
        return Ok(());
    }
    let sub = dir.join("snapshots");
    fs::create_dir_all(&sub).map_err(|source| IoError::File {
        path: sub.clone(),
        source,
    })?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        if k % cfg.output.cadence == 0 || k + 1 == traj.len() {
            let p = sub.join(format!("snap_{k:05}.txt"));
            write_snapshot(&p, s, &cfg.params)?;
            report.files.push(p);
        }
    }
    Ok(())
}

fn energy_rows(budget: &EnergyBudget) -> Vec<Vec<f64>> {
    budget
        .times
        .iter()
        .zip(&budget.reports)
        .map(|(t, r)| std::iter::once(*t).chain(r.columns()).collect())
        .collect()
}

fn equilibrium(cfg: &ExperimentConfig, dir: &Path, report: &mut ScenarioReport) -> IoResult<()> {
    let g = cfg.grid.build()?;
    let model = cfg.model.build(&g)?;
    let rho = cfg.initial.density;
    let s0 = CoupledState::equilibrium(g, rho);
    let hold = RestLoad {
        pressure: rho.powf(cfg.params.gamma),
    };
    let out = run_from(s0, &cfg.scheme, &cfg.params, &model, Some(&hold))?;
    let rows: Vec<Vec<f64>> = out
        .trajectory
        .snapshots
        .iter()
        .map(|s| {
            let dr = s.fluid.r.values().iter().map(|r| (r - rho).abs()).fold(0.0, f64::max);
            vec![s.time, dr, s.fluid.u.max_abs(), s.plate.w.max_abs(), s.plate.v.max_abs()]
        })
        .collect();
    let worst = rows.iter().flat_map(|r| r[1..].iter().copied()).fold(0.0, f64::max);
    emit_series(
        cfg,
        report,
        dir.join("deviation.csv"),
        &["time", "density_deviation", "velocity_max", "displacement_max", "plate_velocity_max"],
        &rows,
    )?;
    emit_snapshots(cfg, dir, &out.trajectory, report)?;
    report.summary.push(("max_deviation".into(), worst));
    match out.error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn free_decay(cfg: &ExperimentConfig, dir: &Path, report: &mut ScenarioReport) -> IoResult<()> {
    let g = cfg.grid.build()?;
    let model = cfg.model.build(&g)?;
    let (traj, err) = simulate(cfg, &g, cfg.scheme.dt, cfg.scheme.snapshot_every)?;
    let budget = energy_budget(&traj, &cfg.params, &model)?;
    emit_series(cfg, report, dir.join("energy.csv"), &ENERGY_COLUMNS, &energy_rows(&budget))?;
    let gaps: Vec<Vec<f64>> = budget
        .times
        .iter()
        .zip(&budget.gaps)
        .map(|(t, gap)| vec![*t, *gap, budget.tolerance])
        .collect();
    emit_series(cfg, report, dir.join("budget.csv"), &["time", "gap", "tolerance"], &gaps)?;
    emit_snapshots(cfg, dir, &traj, report)?;
    report.summary.push(("initial_energy".into(), budget.initial()));
    report.summary.push(("max_gap".into(), budget.max_gap()));
    report.summary.push(("tolerance".into(), budget.tolerance));
    report.summary.push(("violations".into(), budget.violations.len() as f64));
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// The manufactured convergence study on `cfg.mms.levels`.
pub fn mms_study(cfg: &ExperimentConfig) -> IoResult<ConvergenceStudy> {
    Ok(convergence_study(&manufactured(cfg), &cfg.mms.levels, cfg.mms.cfl, cfg.scheme.t_end)?)
}

fn forced_mms(cfg: &ExperimentConfig, dir: &Path, report: &mut ScenarioReport) -> IoResult<()> {
    let study = mms_study(cfg)?;
    let rows: Vec<Vec<f64>> = (0..study.nx.len())
        .map(|k| {
            let order = if k == 0 { f64::NAN } else { study.orders[k - 1] };
            vec![study.nx[k] as f64, study.dt[k], study.errors[k], order]
        })
        .collect();
    emit_series(cfg, report, dir.join("mms.csv"), &["nx", "dt", "error", "order"], &rows)?;
    report.summary.push(("min_order".into(), study.min_order()));
    Ok(())
}

fn wsu(cfg: &ExperimentConfig, dir: &Path, report: &mut ScenarioReport) -> IoResult<()> {
    let study = wsu_study(cfg)?;
    let mut table = Vec::new();
    for (k, p) in study.pairs.iter().enumerate() {
        let rows: Vec<Vec<f64>> = p
            .times
            .iter()
            .zip(&p.entropy)
            .map(|(t, e)| {
                vec![
                    *t,
                    e.fluid_kinetic_gap,
                    e.pressure_gap,
                    e.plate_velocity_gap,
                    e.bending_gap,
                    e.thermal_gap,
                    e.quasilinear_gap,
                    e.total,
                ]
            })
            .collect();
        emit_series(
            cfg,
            report,
            dir.join(format!("entropy_{}_{}.csv", p.coarse, p.fine)),
            &ENTROPY_COLUMNS,
            &rows,
        )?;
        let (max_res, tol) = match &p.residual {
            Ok(series) => {
                let rows: Vec<Vec<f64>> = series
                    .times
                    .iter()
                    .enumerate()
                    .map(|(i, t)| vec![*t, series.residual[i], series.entropy[i], series.remainder[i], series.tolerance])
                    .collect();
                emit_series(
                    cfg,
                    report,
                    dir.join(format!("relative_energy_{}_{}.csv", p.coarse, p.fine)),
                    &["time", "residual", "entropy", "remainder", "tolerance"],
                    &rows,
                )?;
                (series.max_residual(), series.tolerance)
            }
            Err(_) => (f64::NAN, f64::NAN),
        };
        let factor = if k == 0 { f64::NAN } else { study.pairs[k - 1].sup_entropy / p.sup_entropy };
        table.push(vec![p.coarse as f64, p.fine as f64, p.sup_entropy, factor, max_res, tol]);
        report.summary.push((format!("sup_entropy_{}_{}", p.coarse, p.fine), p.sup_entropy));
    }
    emit_series(
        cfg,
        report,
        dir.join("wsu.csv"),
        &["coarse_nx", "fine_nx", "sup_entropy", "reduction", "max_residual", "residual_tolerance"],
        &table,
    )?;
    if let Some(f) = study.reduction_factors().into_iter().reduce(f64::min) {
        report.summary.push(("min_reduction".into(), f));
    }
    Ok(())
}

fn scan(cfg: &ExperimentConfig, dir: &Path, report: &mut ScenarioReport) -> IoResult<()> {
    let (traj, scan) = regularity_study(cfg)?;
    let mut columns = vec!["s".to_string(), "ratio".to_string()];
    columns.extend(cfg.scan.h_decades.iter().map(|m| format!("norm_h{m}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut order: Vec<usize> = (0..cfg.scan.h_decades.len()).collect();
    order.sort_by_key(|&i| cfg.scan.h_decades[i]);
    let rows: Vec<Vec<f64>> = scan
        .s_grid
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut row = vec![*s, scan.ratios[k]];
            // norms are stored by increasing shift; report them in config order
            let mut by_cfg = vec![0.0; order.len()];
            for (rank, &i) in order.iter().enumerate() {
                by_cfg[i] = scan.norms[k][rank];
            }
            row.extend(by_cfg);
            row
        })
        .collect();
    emit_series(cfg, report, dir.join("scan.csv"), &cols, &rows)?;
    emit_snapshots(cfg, dir, &traj, report)?;
    let g = cfg.grid.build()?;
    let theory = threshold_s(cfg.params.gamma, g.dim(), cfg.model.alpha > 0.0)?;
    report.summary.push(("threshold_theory".into(), theory));
    report.summary.push(("threshold_empirical".into(), scan.threshold.unwrap_or(f64::NAN)));
    Ok(())
}

fn invariant_suite(cfg: &ExperimentConfig, dir: &Path, report: &mut ScenarioReport) -> IoResult<()> {
    let checks = crate::invariants::run_all(cfg.seed)?;
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let p = dir.join("invariants.txt");
    fs::write(&p, text).map_err(|source| IoError::File {
        path: p.clone(),
        source,
    })?;
    report.files.push(p);
    let failed = checks.iter().filter(|c| !c.passed).count();
    report.summary.push(("checks".into(), checks.len() as f64));
    report.summary.push(("failed".into(), failed as f64));
    if failed > 0 {
        return Err(IoError::Invalid(format!("{failed} invariant checks failed")));
    }
    Ok(())
}

/// State used by `compare`: both snapshots plus the entropy of the first relative to the second.
pub fn compare_snapshots(a: &Path, b: &Path) -> IoResult<EntropyReport> {
    let sa = crate::io::read_snapshot(a)?;
    let sb = crate::io::read_snapshot(b)?;
    if sa.params != sb.params {
        return Err(IoError::Invalid("snapshots were written with different fluid parameters".into()));
    }
    Ok(relative_entropy(&sa.state, &sb.state, &sb.params, &PlateModel::linear(0.0))?)
}

/// Validated initial state of the configuration, for `check`.
pub fn initial_state(cfg: &ExperimentConfig) -> IoResult<CoupledState> {
    let g = cfg.grid.build()?;
    let model = cfg.model.build(&g)?;
    Ok(validate_initial_data(&initial_data(cfg, &g, &model)?)?)
}
