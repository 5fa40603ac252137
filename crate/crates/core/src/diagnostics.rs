//! Energy, relative entropy and the inequalities built from them.
//!
//! Volume integrals use the node weights times J = 1 + w; plate integrals use
//! the trapezoid weights. Time integrals are trapezoidal over the snapshots.

use crate::coupling::{CoupledState, Trajectory};
use crate::error::{Error, Result};
use crate::fluid::{flatten, potential_unchecked, stress, FluidParams};
use crate::fv::{check_supported, FluidOperators};
use crate::geometry::{build_geometry, transformed_gradient, transformed_gradient_vector};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::plate::{bilaplacian, plate_laplacian, potential, quasilinear_potential, PlateModel};
use crate::stencil::{cell_measure, forward_cells, forward_gradient, laplacian};

/// Absolute tolerance factor of the energy budget, scaled by 1 + E(0).
pub const ENERGY_TOL: f64 = 1e-6;
/// Factor of (dt + hx)(1 + E(0)) allowed for the relative energy residual.
pub const RELATIVE_ENERGY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub internal: f64,
    pub plate_kinetic: f64,
    pub bending: f64,
    /// Π(w) of a nonlinear plate model, ¼∫(Δw)⁴ for the quasilinear one.
    pub potential: f64,
    pub viscous_dissipation_cum: f64,
    pub plate_dissipation_cum: f64,
    /// ½∫θ², reported only; the temperature does not act on the plate.
    pub thermal: f64,
    pub thermal_dissipation_cum: f64,
    /// Stored energy plus the mechanical dissipation so far.
    pub total: f64,
}

impl EnergyReport {
    /// Energy without the dissipation integrals.
    pub fn stored(&self) -> f64 {
        self.kinetic + self.internal + self.plate_kinetic + self.bending + self.potential
    }

    /// Values in the order of [`ENERGY_COLUMNS`] (after `time`).
    pub fn columns(&self) -> [f64; 7] {
        [
            self.kinetic,
            self.internal,
            self.plate_kinetic,
            self.bending,
            self.viscous_dissipation_cum,
            self.plate_dissipation_cum,
            self.total,
        ]
    }
}

pub const ENERGY_COLUMNS: [&str; 8] = [
    "time",
    "kinetic",
    "internal",
    "plate_kinetic",
    "bending",
    "viscous_dissipation_cum",
    "plate_dissipation_cum",
    "total",
];

/// Dissipation accumulated up to the snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dissipation {
    pub viscous: f64,
    pub plate: f64,
    pub thermal: f64,
}

fn volumes(s: &CoupledState) -> Vec<f64> {
    let g = s.grid();
    let w = s.plate.w.values();
    (0..g.fluid_len())
        .map(|node| g.fluid_weight(node) * (1.0 + w[g.node_split(node).0]))
        .collect()
}

/// ∫|∇f|² with forward differences, the quadratic form of −Δ_h.
fn dirichlet(g: &Grid, f: &[f64]) -> f64 {
    let cells = forward_cells(g);
    let grad = forward_gradient(g, f, &cells);
    cell_measure(g) * grad.iter().flatten().map(|x| x * x).sum::<f64>()
}

/// Viscous dissipation rate ∫J S(∇U):∇U, taken from the solver's own
/// quadrature where the solver applies and from nodal gradients elsewhere.
struct Viscous {
    ops: Option<FluidOperators>,
    params: FluidParams,
}

impl Viscous {
    fn new(g: &Grid, params: &FluidParams) -> Result<Self> {
        let ops = match check_supported(g) {
            Ok(()) => Some(FluidOperators::new(g, params)?),
            Err(_) => None,
        };
        Ok(Viscous { ops, params: *params })
    }

    fn form(&mut self, s: &CoupledState, u: &VectorField, other: &VectorField) -> Result<f64> {
        if let Some(ops) = &mut self.ops {
            ops.update(s.plate.w.values());
            let (a, b) = (flatten(u), flatten(other));
            let mut ab = vec![0.0; a.len()];
            ops.a().mul_vec(&b, &mut ab);
            return Ok(crate::linalg::dot(&a, &ab));
        }
        let geo = build_geometry(&s.plate.w, &s.plate.v)?;
        let gu = transformed_gradient_vector(u, &geo)?;
        let go = transformed_gradient_vector(other, &geo)?;
        let d = s.grid().dim();
        let vol = volumes(s);
        let mut sum = 0.0;
        for (node, v) in vol.iter().enumerate() {
            let sg = stress(gu.at(node), d, &self.params);
            let go = go.at(node);
            for a in 0..d {
                for b in 0..d {
                    sum += v * sg[a][b] * go[a][b];
                }
            }
        }
        Ok(sum)
    }

    fn rate(&mut self, s: &CoupledState) -> Result<f64> {
        if let Some(ops) = &mut self.ops {
            ops.update(s.plate.w.values());
            return Ok(ops.viscous_energy(&flatten(&s.fluid.u)));
        }
        self.form(s, &s.fluid.u, &s.fluid.u)
    }
}

fn stored_parts(s: &CoupledState, params: &FluidParams, model: &PlateModel) -> Result<EnergyReport> {
    let g = *s.grid();
    let vol = volumes(s);
    let r = s.fluid.r.values();
    let d = g.dim();
    let (mut kinetic, mut internal) = (0.0, 0.0);
    for (node, v) in vol.iter().enumerate() {
        let u = s.fluid.u.at(node);
        kinetic += 0.5 * v * r[node] * u[..d].iter().map(|c| c * c).sum::<f64>();
        internal += v * r[node].max(0.0).powf(params.gamma);
    }
    internal /= params.gamma - 1.0;
    let lap = plate_laplacian(&s.plate.w);
    let pot = if model.is_quasilinear() {
        quasilinear_potential(&s.plate.w)
    } else {
        potential(model, &s.plate.w)?
    };
    let thermal = s.plate.theta.as_ref().map_or(0.0, |t| 0.5 * t.inner(t));
    Ok(EnergyReport {
        kinetic,
        internal,
        plate_kinetic: 0.5 * s.plate.v.inner(&s.plate.v),
        bending: 0.5 * lap.inner(&lap),
        potential: pot,
        thermal,
        ..Default::default()
    })
}

/// Energy of one snapshot with the given accumulated dissipation.
pub fn energy(state: &CoupledState, dissipation: Dissipation, params: &FluidParams, model: &PlateModel) -> Result<EnergyReport> {
    let mut e = stored_parts(state, params, model)?;
    e.viscous_dissipation_cum = dissipation.viscous;
    e.plate_dissipation_cum = dissipation.plate;
    e.thermal_dissipation_cum = dissipation.thermal;
    e.total = e.stored() + dissipation.viscous + dissipation.plate;
    Ok(e)
}

/// Instantaneous dissipation rates (viscous, plate, thermal).
pub fn dissipation_rates(state: &CoupledState, params: &FluidParams, model: &PlateModel) -> Result<Dissipation> {
    let mut v = Viscous::new(state.grid(), params)?;
    rates(&mut v, state, model)
}

fn rates(v: &mut Viscous, s: &CoupledState, model: &PlateModel) -> Result<Dissipation> {
    let g = s.grid();
    Ok(Dissipation {
        viscous: v.rate(s)?,
        plate: model.alpha * dirichlet(g, s.plate.v.values()),
        thermal: s.plate.theta.as_ref().map_or(0.0, |t| dirichlet(g, t.values())),
    })
}

#[derive(Debug, Clone)]
pub struct EnergyBudget {
    pub times: Vec<f64>,
    pub reports: Vec<EnergyReport>,
    /// total(t) − total(0).
    pub gaps: Vec<f64>,
    pub tolerance: f64,
    /// Snapshot indices whose gap exceeds the tolerance.
    pub violations: Vec<usize>,
}

impl EnergyBudget {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn initial(&self) -> f64 {
        self.reports.first().map_or(0.0, |r| r.total)
    }
}

/// Energy inequality along a trajectory, with trapezoidal dissipation integrals.
pub fn energy_budget(traj: &Trajectory, params: &FluidParams, model: &PlateModel) -> Result<EnergyBudget> {
    let Some(first) = traj.snapshots.first() else {
        return Err(Error::TooFewSnapshots { needed: 1, got: 0 });
    };
    let mut visc = Viscous::new(first.grid(), params)?;
    let mut cum = Dissipation::default();
    let mut prev: Option<(f64, Dissipation)> = None;
    let mut reports = Vec::with_capacity(traj.len());
    for s in &traj.snapshots {
        let rate = rates(&mut visc, s, model)?;
        if let Some((t0, r0)) = prev {
            let h = 0.5 * (s.time - t0);
            cum.viscous += h * (r0.viscous + rate.viscous);
            cum.plate += h * (r0.plate + rate.plate);
            cum.thermal += h * (r0.thermal + rate.thermal);
        }
        prev = Some((s.time, rate));
        reports.push(energy(s, cum, params, model)?);
    }
    let e0 = reports[0].total;
    let tolerance = ENERGY_TOL * (1.0 + e0.abs());
    let gaps: Vec<f64> = reports.iter().map(|r| r.total - e0).collect();
    let violations = gaps
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > tolerance || !g.is_finite())
        .map(|(i, _)| i)
        .collect();
    Ok(EnergyBudget {
        times: traj.times(),
        reports,
        gaps,
        tolerance,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EntropyReport {
    pub fluid_kinetic_gap: f64,
    pub pressure_gap: f64,
    pub plate_velocity_gap: f64,
    pub bending_gap: f64,
    pub thermal_gap: f64,
    /// ∫[(Δw₁)³ − (Δw₂)³](Δw₁ − Δw₂), quasilinear model only.
    pub quasilinear_gap: f64,
    pub total: f64,
}

fn check_same(s1: &CoupledState, s2: &CoupledState) -> Result<()> {
    s1.grid().ensure_same(s2.grid())
}

/// E(s₁ | s₂) on the fixed domain, weighted by J = 1 + w₁.
///
/// The pressure gap needs r₂ > 0 wherever it is evaluated; nodes with
/// r₂ = 0 contribute r₁^γ/(γ−1).
pub fn relative_entropy(s1: &CoupledState, s2: &CoupledState, params: &FluidParams, model: &PlateModel) -> Result<EntropyReport> {
    check_same(s1, s2)?;
    let g = *s1.grid();
    let d = g.dim();
    let gamma = params.gamma;
    let vol = volumes(s1);
    let (r1, r2) = (s1.fluid.r.values(), s2.fluid.r.values());
    let (mut kin, mut press) = (0.0, 0.0);
    for (node, v) in vol.iter().enumerate() {
        let (u1, u2) = (s1.fluid.u.at(node), s2.fluid.u.at(node));
        kin += 0.5 * v * r1[node] * (0..d).map(|c| (u1[c] - u2[c]).powi(2)).sum::<f64>();
        let f = if r2[node] > 0.0 {
            potential_unchecked(r1[node].max(0.0), r2[node], gamma)
        } else {
            r1[node].max(0.0).powf(gamma)
        };
        press += v * f;
    }
    press /= gamma - 1.0;
    let dv = s1.plate.v.zip_map(&s2.plate.v, |a, b| a - b);
    let l1 = plate_laplacian(&s1.plate.w);
    let l2 = plate_laplacian(&s2.plate.w);
    let dl = l1.zip_map(&l2, |a, b| a - b);
    let thermal_gap = match (&s1.plate.theta, &s2.plate.theta) {
        (Some(a), Some(b)) => {
            let dt = a.zip_map(b, |x, y| x - y);
            0.5 * dt.inner(&dt)
        }
        _ => 0.0,
    };
    let quasilinear_gap = if model.is_quasilinear() {
        l1.zip_map(&l2, |a, b| (a.powi(3) - b.powi(3)) * (a - b)).integral()
    } else {
        0.0
    };
    let mut rep = EntropyReport {
        fluid_kinetic_gap: kin,
        pressure_gap: press,
        plate_velocity_gap: 0.5 * dv.inner(&dv),
        bending_gap: 0.5 * dl.inner(&dl),
        thermal_gap,
        quasilinear_gap,
        total: 0.0,
    };
    rep.total = rep.fluid_kinetic_gap + rep.pressure_gap + rep.plate_velocity_gap + rep.bending_gap + rep.thermal_gap + rep.quasilinear_gap;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDistanceReport {
    /// ‖r₁ − r₂‖²_{L^p}, p = min(2, γ), with the J-weighted measure.
    pub lhs: f64,
    /// Bound assembled from the pressure gap on each density regime.
    pub bound: f64,
    /// bound / E(s₁|s₂), or 0 when the entropy vanishes.
    pub c_check: f64,
    pub entropy: f64,
    pub holds: bool,
}

/// Relative slack for rounding in the density-distance comparison.
const DISTANCE_SLACK: f64 = 1e-12;

/// Checks ‖r₁ − r₂‖²_{L^{2∧γ}} ≤ C·E(s₁|s₂) regime by regime.
///
/// Near the diagonal, r₂/2 ≤ r₁ ≤ 2r₂, the pressure gap controls |r₁ − r₂|²
/// (an |r₁ − r₂|^γ bound fails there when γ < 2, so the quadratic one is used
/// and Hölder converts it to L^γ). Away from it the gap controls 1 + r₁^{2∧γ},
/// which dominates |r₁ − r₂|^{2∧γ} up to max(1, C_r2^{2∧γ}).
pub fn density_distance_check(
    s1: &CoupledState,
    s2: &CoupledState,
    params: &FluidParams,
    c_r2: f64,
    cap_r2: f64,
) -> Result<DensityDistanceReport> {
    density_distance_check_with(s1, s2, params, &DensityConstants::new(c_r2, cap_r2, params.gamma)?)
}

/// Scanned constants of the density-distance bound for one band and γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityConstants {
    pub c_r2: f64,
    pub cap_r2: f64,
    pub gamma: f64,
    /// Quadratic near-diagonal constant.
    pub c2: f64,
    pub c_far: f64,
}

impl DensityConstants {
    pub fn new(c_r2: f64, cap_r2: f64, gamma: f64) -> Result<Self> {
        let bounds = crate::fluid::pressure_potential_bounds(c_r2, cap_r2, gamma)?;
        Ok(DensityConstants {
            c_r2,
            cap_r2,
            gamma,
            c2: crate::fluid::quadratic_near_constant(c_r2, cap_r2, gamma)?,
            c_far: bounds.c_far,
        })
    }
}

/// [`density_distance_check`] with precomputed constants.
pub fn density_distance_check_with(
    s1: &CoupledState,
    s2: &CoupledState,
    params: &FluidParams,
    consts: &DensityConstants,
) -> Result<DensityDistanceReport> {
    check_same(s1, s2)?;
    if consts.gamma != params.gamma {
        return Err(Error::InvalidParameter(format!(
            "constants were scanned for gamma = {}, params carry {}",
            consts.gamma, params.gamma
        )));
    }
    let (c_r2, cap_r2, gamma) = (consts.c_r2, consts.cap_r2, consts.gamma);
    let p = gamma.min(2.0);
    let (r1, r2) = (s1.fluid.r.values(), s2.fluid.r.values());
    for (node, &v) in r2.iter().enumerate() {
        if !(v >= c_r2 && v <= cap_r2) {
            return Err(Error::OutOfBand {
                node,
                value: v,
                lo: c_r2,
                hi: cap_r2,
            });
        }
    }
    let c2 = consts.c2;
    let vol = volumes(s1);
    let measure: f64 = vol.iter().sum();
    let (mut x_all, mut f_near, mut f_far) = (0.0, 0.0, 0.0);
    for (node, v) in vol.iter().enumerate() {
        let (a, b) = (r1[node].max(0.0), r2[node]);
        x_all += v * (a - b).abs().powf(p);
        let f = v * potential_unchecked(a, b, gamma);
        if a >= 0.5 * b && a <= 2.0 * b {
            f_near += f;
        } else {
            f_far += f;
        }
    }
    let lhs = x_all.powf(2.0 / p);
    let k = cap_r2.powf(p).max(1.0);
    let near = measure.powf(2.0 / p - 1.0) * f_near / c2;
    let far = (k * f_far / consts.c_far).powf(2.0 / p);
    let bound = 2f64.powf(2.0 / p - 1.0) * (near + far);
    let entropy = (f_near + f_far) / (gamma - 1.0);
    let c_check = if entropy > 0.0 { bound / entropy } else { 0.0 };
    Ok(DensityDistanceReport {
        lhs,
        bound,
        c_check,
        entropy,
        holds: lhs <= bound * (1.0 + DISTANCE_SLACK) + f64::MIN_POSITIVE,
    })
}

#[derive(Debug, Clone)]
pub struct RelativeEnergySeries {
    pub times: Vec<f64>,
    /// E(t) + relative dissipation − E(0) − ∫R, per snapshot.
    pub residual: Vec<f64>,
    pub entropy: Vec<f64>,
    pub remainder: Vec<f64>,
    pub tolerance: f64,
}

impl RelativeEnergySeries {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.residual.iter().all(|r| *r <= self.tolerance)
    }
}

/// Centered difference in time with one-sided ends.
fn time_derivative(series: &[&[f64]], times: &[f64], k: usize) -> Vec<f64> {
    let n = series.len();
    let (a, b) = if k == 0 {
        (0, 1)
    } else if k == n - 1 {
        (n - 2, n - 1)
    } else {
        (k - 1, k + 1)
    };
    let h = times[b] - times[a];
    series[b].iter().zip(series[a]).map(|(x, y)| (x - y) / h).collect()
}

/// Relative energy inequality of `traj1` with respect to the smooth
/// trajectory `traj2`, evaluated snapshot by snapshot.
///
/// Time derivatives of the second trajectory are finite differences. Only
/// plate models without a nonlinear force or temperature are supported.
pub fn relative_energy_residual(
    traj1: &Trajectory,
    traj2: &Trajectory,
    params: &FluidParams,
    model: &PlateModel,
) -> Result<RelativeEnergySeries> {
    if model.force.is_some() || model.is_thermal() {
        return Err(Error::Unsupported(
            "relative energy residual for nonlinear or thermal plate models".into(),
        ));
    }
    let ns = traj1.len();
    if traj2.len() != ns {
        return Err(Error::Desynchronized {
            index: ns.min(traj2.len()),
            t1: traj1.last().map_or(f64::NAN, |s| s.time),
            t2: traj2.last().map_or(f64::NAN, |s| s.time),
        });
    }
    if ns < 2 {
        return Err(Error::TooFewSnapshots { needed: 2, got: ns });
    }
    let t1 = traj1.times();
    let t2 = traj2.times();
    for k in 0..ns {
        let scale = t1[k].abs().max(t2[k].abs()).max(1.0);
        if (t1[k] - t2[k]).abs() > 1e-9 * scale {
            return Err(Error::Desynchronized {
                index: k,
                t1: t1[k],
                t2: t2[k],
            });
        }
        check_same(&traj1.snapshots[k], &traj2.snapshots[k])?;
    }
    let g = *traj1.snapshots[0].grid();
    let d = g.dim();
    let n = g.fluid_len();
    let gamma = params.gamma;
    let mut visc = Viscous::new(&g, params)?;

    let u2_flat: Vec<Vec<f64>> = traj2.snapshots.iter().map(|s| flatten(&s.fluid.u)).collect();
    let u2_refs: Vec<&[f64]> = u2_flat.iter().map(|v| v.as_slice()).collect();
    let pr2: Vec<Vec<f64>> = traj2
        .snapshots
        .iter()
        .map(|s| s.fluid.r.values().iter().map(|r| r.powf(gamma - 1.0)).collect())
        .collect();
    let pr2_refs: Vec<&[f64]> = pr2.iter().map(|v| v.as_slice()).collect();
    let v2: Vec<&[f64]> = traj2.snapshots.iter().map(|s| s.plate.v.values()).collect();

    let mut entropy = Vec::with_capacity(ns);
    let mut remainder = Vec::with_capacity(ns);
    let mut diss = Vec::with_capacity(ns);
    for k in 0..ns {
        let (s1, s2) = (&traj1.snapshots[k], &traj2.snapshots[k]);
        entropy.push(relative_entropy(s1, s2, params, model)?.total);
        let geo = build_geometry(&s1.plate.w, &s1.plate.v)?;
        let vol = volumes(s1);
        let du = s1.fluid.u.zip_map(&s2.fluid.u, |a, b| a - b);
        let neg = s2.fluid.u.zip_map(&s1.fluid.u, |a, b| a - b);
        let dv_grad = {
            let dv = s1.plate.v.zip_map(&s2.plate.v, |a, b| a - b);
            model.alpha * dirichlet(&g, dv.values())
        };
        diss.push(visc.form(s1, &du, &du)? + dv_grad);

        let mut rem = visc.form(s1, &s2.fluid.u, &neg)?;
        let gu2 = transformed_gradient_vector(&s2.fluid.u, &geo)?;
        let grad_p = transformed_gradient(&ScalarField::from_vec_unchecked(g, pr2[k].clone()), &geo)?;
        let du2dt = time_derivative(&u2_refs, &t2, k);
        let dpdt = time_derivative(&pr2_refs, &t2, k);
        let (r1, r2) = (s1.fluid.r.values(), s2.fluid.r.values());
        for node in 0..n {
            let v = vol[node];
            let (u1, u2) = (s1.fluid.u.at(node), s2.fluid.u.at(node));
            let ale = geo.ale_velocity.at(node);
            let g2 = gu2.at(node);
            let gp = grad_p.at(node);
            for c in 0..d {
                let mut conv = du2dt[c * n + node];
                for b in 0..d {
                    conv += (u1[b] - ale[b]) * g2[c][b];
                }
                rem += v * r1[node] * conv * (u2[c] - u1[c]);
            }
            let gpv = &gp;
            let mut flux = 0.0;
            let mut ale_dot = 0.0;
            for b in 0..d {
                flux += (r2[node] * u2[b] - r1[node] * u1[b]) * gpv[b];
                ale_dot += ale[b] * gpv[b];
            }
            rem += gamma / (gamma - 1.0) * v * (flux + (r1[node] - r2[node]) * (dpdt[node] - ale_dot));
            let div2: f64 = (0..d).map(|a| g2[a][a]).sum();
            rem += v * (r2[node].powf(gamma) - r1[node].max(0.0).powf(gamma)) * div2;
        }
        let wt1 = s1.plate.v.values();
        let wt2 = s2.plate.v.values();
        let acc = time_derivative(&v2, &t2, k);
        let bil = bilaplacian(&s2.plate.w);
        let lap_v2 = laplacian(&g, wt2);
        for ip in 0..g.plate_len() {
            let pw = g.plate_weight(ip);
            let top = g.node(ip, g.nz);
            let dw = wt2[ip] - wt1[ip];
            rem += pw * (dw * r2[top].powf(gamma) - dw * acc[ip] - dw * bil.values()[ip] - model.alpha * lap_v2[ip] * dw);
        }
        remainder.push(rem);
    }
    let mut residual = Vec::with_capacity(ns);
    let (mut int_d, mut int_r) = (0.0, 0.0);
    for k in 0..ns {
        if k > 0 {
            let h = 0.5 * (t1[k] - t1[k - 1]);
            int_d += h * (diss[k] + diss[k - 1]);
            int_r += h * (remainder[k] + remainder[k - 1]);
        }
        residual.push(entropy[k] + int_d - entropy[0] - int_r);
    }
    let dt = t1.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let e0 = traj1.snapshots[0].clone();
    let e0 = energy(&e0, Dissipation::default(), params, model)?.total;
    Ok(RelativeEnergySeries {
        times: t1,
        residual,
        entropy,
        remainder,
        tolerance: RELATIVE_ENERGY_FACTOR * (dt + g.hx()) * (1.0 + e0),
    })
}

#[derive(Debug, Clone)]
pub struct GronwallReport {
    /// E(0)·exp(C∫₀^t h).
    pub bound: Vec<f64>,
    pub tolerance: f64,
    pub violations: Vec<usize>,
}

impl GronwallReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks E(t) ≤ E(0)·exp(C∫₀^t h) pointwise, with tolerance 1e−6·(1 + |E(0)|).
pub fn gronwall_check(times: &[f64], e: &[f64], h: &[f64], c: f64) -> Result<GronwallReport> {
    if times.len() != e.len() || times.len() != h.len() {
        return Err(Error::Dimension(format!(
            "series lengths differ: {} times, {} values, {} rates",
            times.len(),
            e.len(),
            h.len()
        )));
    }
    if times.is_empty() {
        return Err(Error::TooFewSnapshots { needed: 1, got: 0 });
    }
    if let Some(k) = h.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::Domain(format!("h must be nonnegative, got {} at index {k}", h[k])));
    }
    let e0 = e[0];
    let tolerance = ENERGY_TOL * (1.0 + e0.abs());
    let mut integral = 0.0;
    let mut bound = Vec::with_capacity(e.len());
    let mut violations = Vec::new();
    for k in 0..e.len() {
        if k > 0 {
            integral += 0.5 * (times[k] - times[k - 1]) * (h[k] + h[k - 1]);
        }
        let b = e0 * (c * integral).exp();
        if !(e[k] <= b + tolerance) {
            violations.push(k);
        }
        bound.push(b);
    }
    Ok(GronwallReport {
        bound,
        tolerance,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::FluidState;
    use crate::grid::PlateField;
    use crate::plate::PlateState;

    fn unit(nx: usize, nz: usize) -> Grid {
        Grid::periodic(nx, nz, 1.0).unwrap()
    }

    fn state(g: Grid, r: f64) -> CoupledState {
        CoupledState::equilibrium(g, r)
    }

    #[test]
    fn energy_examples() {
        let g = Grid::periodic(16, 8, 3.0).unwrap();
        let model = PlateModel::linear(0.0);
        let p = FluidParams::default();
        let zero = energy(&state(g, 0.0), Dissipation::default(), &p, &model).unwrap();
        assert_eq!(zero.total, 0.0);
        let e = energy(&state(g, 1.0), Dissipation::default(), &p, &model).unwrap();
        assert!((e.total - 3.0).abs() < 1e-13);
        assert_eq!(e.kinetic, 0.0);
    }

    #[test]
    fn entropy_examples() {
        let g = unit(8, 4);
        let p = FluidParams::default();
        let m = PlateModel::linear(0.0);
        let e = relative_entropy(&state(g, 2.0), &state(g, 1.0), &p, &m).unwrap();
        assert!((e.pressure_gap - 1.0).abs() < 1e-13);
        let e = relative_entropy(&state(g, 1.5), &state(g, 1.0), &p, &m).unwrap();
        assert!((e.pressure_gap - 0.25).abs() < 1e-13);
        let s = state(g, 1.3);
        assert_eq!(relative_entropy(&s, &s, &p, &m).unwrap().total, 0.0);
    }

    #[test]
    fn density_distance_examples() {
        let g = unit(8, 4);
        let p = FluidParams::default();
        let s = state(g, 1.0);
        let r = density_distance_check(&s, &s, &p, 0.5, 2.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
        let r = density_distance_check(&state(g, 1.5), &s, &p, 0.5, 2.0).unwrap();
        assert!((r.lhs - 0.25).abs() < 1e-13);
        assert!(r.holds);
        assert!(matches!(
            density_distance_check(&s, &state(g, 3.0), &p, 0.5, 2.0),
            Err(Error::OutOfBand { .. })
        ));
    }

    #[test]
    fn gronwall_examples() {
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let zero = vec![0.0; t.len()];
        assert!(gronwall_check(&t, &zero, &zero, 1.0).unwrap().passed());
        let e: Vec<f64> = t.iter().map(|x| x.exp()).collect();
        let one = vec![1.0; t.len()];
        assert!(gronwall_check(&t, &e, &one, 1.0).unwrap().passed());
        let fast: Vec<f64> = t.iter().map(|x| (2.0 * x).exp()).collect();
        assert!(!gronwall_check(&t, &fast, &one, 1.0).unwrap().passed());
    }

    #[test]
    fn budget_flags_injected_energy() {
        let g = Grid::periodic(16, 8, 2.0 * std::f64::consts::PI).unwrap();
        let p = FluidParams::default();
        let m = PlateModel::linear(0.0);
        let s = state(g, 1.0);
        let mut hot = s.clone();
        hot.time = 0.1;
        hot.fluid = FluidState::new(ScalarField::constant(g, 1.01), VectorField::zeros(g)).unwrap();
        let mut calm = s.clone();
        calm.time = 0.1;
        let ok = energy_budget(&Trajectory { snapshots: vec![s.clone(), calm] }, &p, &m).unwrap();
        assert!(ok.passed());
        assert_eq!(ok.max_gap(), 0.0);
        let bad = energy_budget(&Trajectory { snapshots: vec![s, hot] }, &p, &m).unwrap();
        assert_eq!(bad.violations, vec![1]);
    }

    #[test]
    fn quasilinear_gap_is_nonnegative() {
        let g = Grid::periodic(32, 4, 2.0 * std::f64::consts::PI).unwrap();
        let p = FluidParams::default();
        let m = PlateModel::new(crate::plate::PlateKind::ThermoQuasilinear, 0.0, None).unwrap();
        let mut a = state(g, 1.0);
        let mut b = state(g, 1.0);
        a.plate = PlateState {
            w: PlateField::from_fn(g, |x, _| 0.3 * x.sin()),
            v: PlateField::zeros(g),
            theta: None,
        };
        b.plate.w = PlateField::from_fn(g, |x, _| 0.1 * (2.0 * x).cos());
        let e = relative_entropy(&a, &b, &p, &m).unwrap();
        assert!(e.quasilinear_gap > 0.0);
    }
}
