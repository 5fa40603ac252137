//! The coupled time stepper.
//!
//! Each step solves one symmetric positive definite system for the fluid
//! velocity, in which the top-row vertical velocity and the plate velocity are
//! the same unknown. Viscosity, Δ², α∂tΔ and a linearized pressure are
//! implicit; convection, the nonlinear plate force and the pressure at tⁿ are
//! explicit. The density is then advanced with upwind fluxes and the plate by
//! w ← w + dt·v.

use serde::{Deserialize, Serialize};

use crate::error::{Error, InitialDataError, Result};
use crate::fluid::{flatten, stress, FluidParams, FluidState, R_FLOOR};
use crate::fv::{check_supported, FluidOperators};
use crate::geometry::{graph_normal, min_gap, surface_jacobian, transformed_gradient_vector, AleGeometry};
use crate::grid::{Grid, PlateField, ScalarField, Topology, VectorField};
use crate::linalg::{dot, projected_pcg};
use crate::plate::{clamped_normal_slope, force_or_zero, quasilinear_force, PlateModel, PlateState};
use crate::stencil::{bilaplacian, laplacian};

/// Fluid, plate and time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub fluid: FluidState,
    pub plate: PlateState,
    pub time: f64,
    /// Face mass fluxes of the last density update; the next step transports
    /// momentum with them so that kinetic energy is not created.
    mass_flux: Option<Vec<f64>>,
}

impl CoupledState {
    pub fn new(fluid: FluidState, plate: PlateState, time: f64) -> Result<Self> {
        let g = *fluid.r.grid();
        g.ensure_same(plate.w.grid())?;
        g.ensure_same(plate.v.grid())?;
        if let Some(th) = &plate.theta {
            g.ensure_same(th.grid())?;
        }
        Ok(CoupledState {
            fluid,
            plate,
            time,
            mass_flux: None,
        })
    }

    /// Constant density at rest over a flat plate.
    pub fn equilibrium(grid: Grid, rho: f64) -> Self {
        CoupledState {
            fluid: FluidState::at_rest(grid, rho),
            plate: PlateState {
                w: PlateField::zeros(grid),
                v: PlateField::zeros(grid),
                theta: None,
            },
            time: 0.0,
            mass_flux: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.fluid.r.grid()
    }

    /// Geometry of the current configuration.
    pub fn geometry(&self) -> Result<AleGeometry> {
        crate::geometry::build_geometry(&self.plate.w, &self.plate.v)
    }

    /// Total fluid mass Σ J·r·vol.
    pub fn mass(&self) -> f64 {
        let g = self.grid();
        let w = self.plate.w.values();
        self.fluid
            .r
            .values()
            .iter()
            .enumerate()
            .map(|(node, r)| {
                let (ip, _) = g.node_split(node);
                g.fluid_weight(node) * (1.0 + w[ip]) * r
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// Linearly implicit: one symmetric solve per step, explicit transport.
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_collision_eps")]
    pub collision_eps: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub coupling_mode: CouplingMode,
    /// Keep every n-th step in the trajectory.
    #[serde(default = "default_every")]
    pub snapshot_every: usize,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
}

fn default_dt() -> f64 {
    2e-3
}
fn default_t_end() -> f64 {
    0.1
}
fn default_collision_eps() -> f64 {
    0.05
}
fn default_cfl() -> f64 {
    0.4
}
fn default_every() -> usize {
    1
}
fn default_cg_tol() -> f64 {
    1e-11
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig::new(default_dt(), default_t_end())
    }
}

impl SchemeConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SchemeConfig {
            dt,
            t_end,
            collision_eps: default_collision_eps(),
            cfl_safety: default_cfl(),
            coupling_mode: CouplingMode::SemiImplicit,
            snapshot_every: 1,
            cg_tol: default_cg_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.collision_eps > 0.0 && self.collision_eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "collision_eps must lie in (0, 1), got {}",
                self.collision_eps
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParameter("snapshot_every must be >= 1".into()));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::InvalidParameter(format!("cg_tol must lie in (0, 1), got {}", self.cg_tol)));
        }
        Ok(())
    }
}

/// Density, momentum and plate data at t = 0.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub rho0: ScalarField,
    pub momentum0: VectorField,
    pub w0: PlateField,
    pub v0: PlateField,
    pub theta0: Option<PlateField>,
}

/// Slope tolerance for the clamped condition ∂ν w₀ = 0, relative to max|w₀|/hx.
const CLAMPED_SLOPE_TOL: f64 = 1e-8;

/// Checks the compatibility conditions and returns the initial state.
///
/// U₀ = (ρu)₀/ρ₀ where ρ₀ > 0 and 0 elsewhere; the wall rows are then set to
/// U = 0 at the bottom and U = (0, v₀) at the top.
pub fn validate_initial_data(data: &InitialData) -> Result<CoupledState> {
    let g = *data.rho0.grid();
    let same = g.same_shape(data.momentum0.grid())
        && g.same_shape(data.w0.grid())
        && g.same_shape(data.v0.grid())
        && data.theta0.as_ref().is_none_or(|t| g.same_shape(t.grid()));
    if !same {
        return Err(InitialDataError::GridMismatch.into());
    }
    let n = g.fluid_len();
    let d = g.dim();
    let rho = data.rho0.values();
    for (node, &r) in rho.iter().enumerate() {
        if r < 0.0 {
            return Err(InitialDataError::NegativeDensity { node, rho: r }.into());
        }
    }
    let mut u = vec![vec![0.0; n]; d];
    for node in 0..n {
        let m = data.momentum0.at(node);
        let nonzero = m[..d].iter().any(|c| *c != 0.0);
        if !nonzero {
            continue;
        }
        if rho[node] <= 0.0 {
            return Err(InitialDataError::MomentumInVacuum { node, rho: rho[node] }.into());
        }
        let ke = m[..d].iter().map(|c| c * c).sum::<f64>() / rho[node];
        if !ke.is_finite() {
            return Err(InitialDataError::InfiniteKineticEnergy { node }.into());
        }
        for c in 0..d {
            u[c][node] = m[c] / rho[node];
        }
    }
    let w = data.w0.values();
    if g.topology == Topology::Clamped {
        let scale = data.w0.max_abs().max(1.0) / g.hx();
        for ip in 0..g.plate_len() {
            if g.is_plate_boundary(ip) {
                let slope = clamped_normal_slope(&data.w0, ip);
                if w[ip] != 0.0 || slope > CLAMPED_SLOPE_TOL * scale {
                    return Err(InitialDataError::ClampedBoundary { node: ip, w: w[ip], slope }.into());
                }
            }
        }
    }
    for (ip, &wv) in w.iter().enumerate() {
        if !(wv > -1.0) {
            return Err(InitialDataError::PlateBelowBottom { node: ip, w: wv }.into());
        }
    }
    for ip in 0..g.plate_len() {
        let (bottom, top) = (g.node(ip, 0), g.node(ip, g.nz));
        for comp in u.iter_mut() {
            comp[bottom] = 0.0;
            comp[top] = 0.0;
        }
        u[d - 1][top] = data.v0.values()[ip];
    }
    Ok(CoupledState {
        fluid: FluidState {
            r: data.rho0.clone(),
            u: VectorField::from_vec_unchecked(g, u),
        },
        plate: PlateState {
            w: data.w0.clone(),
            v: data.v0.clone(),
            theta: data.theta0.clone(),
        },
        time: 0.0,
        mass_flux: None,
    })
}

/// External sources, evaluated at the end of each step.
pub trait Forcing: Send + Sync {
    /// Momentum source per unit physical volume, component-major.
    fn momentum(&self, t: f64, grid: &Grid) -> Vec<f64>;
    /// Mass source per unit physical volume.
    fn mass(&self, t: f64, grid: &Grid) -> Vec<f64>;
    /// Load on the plate equation.
    fn plate(&self, t: f64, grid: &Grid) -> Vec<f64>;
}

/// Reusable stepper holding the assembled operators for one grid.
pub struct Stepper<'a> {
    ops: FluidOperators,
    config: SchemeConfig,
    params: FluidParams,
    model: &'a PlateModel,
    forcing: Option<&'a dyn Forcing>,
    /// CG iterations of the last solve.
    pub last_iterations: usize,
}

const MAX_HALVINGS: u32 = 6;

impl<'a> Stepper<'a> {
    pub fn new(
        grid: &Grid,
        config: SchemeConfig,
        params: FluidParams,
        model: &'a PlateModel,
        forcing: Option<&'a dyn Forcing>,
    ) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        check_supported(grid)?;
        Ok(Stepper {
            ops: FluidOperators::new(grid, &params)?,
            config,
            params,
            model,
            forcing,
            last_iterations: 0,
        })
    }

    /// Advances by `dt`, sub-stepping for the transport limits and halving on
    /// loss of positivity.
    pub fn advance(&mut self, s: &CoupledState, dt: f64) -> Result<CoupledState> {
        let g = *s.grid();
        let umax = s.fluid.u.max_abs();
        let mut limit = if umax > 0.0 {
            self.config.cfl_safety * g.hx().min(g.hz()) / umax
        } else {
            f64::INFINITY
        };
        if let Some(mf) = &s.mass_flux {
            self.ops.update(s.plate.w.values());
            let vol = self.ops.current_volumes();
            for (node, inflow) in self.ops.inflow(mf).iter().enumerate() {
                if *inflow > 0.0 {
                    limit = limit.min(self.config.cfl_safety * vol[node] * s.fluid.r.values()[node] / inflow);
                }
            }
        }
        let base = (dt / limit).ceil().max(1.0) as usize;
        let mut last_err = None;
        for halving in 0..=MAX_HALVINGS {
            let k = base << halving;
            let h = dt / k as f64;
            let mut cur = s.clone();
            let mut failed = None;
            for _ in 0..k {
                match self.substep(&cur, h) {
                    Ok(next) => cur = next,
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                }
            }
            match failed {
                None => {
                    cur.time = s.time + dt;
                    return Ok(cur);
                }
                Some(e @ (Error::NegativeDensity { .. } | Error::Vacuum { .. })) => last_err = Some(e),
                Some(e) => return Err(e),
            }
        }
        Err(last_err.unwrap())
    }

    fn substep(&mut self, s: &CoupledState, dt: f64) -> Result<CoupledState> {
        let g = *s.grid();
        let n = g.fluid_len();
        let np = g.plate_len();
        let nz = g.nz;
        let w = s.plate.w.values();
        let v = s.plate.v.values();
        let r = s.fluid.r.values();
        let u = flatten(&s.fluid.u);
        let t1 = s.time + dt;
        self.ops.update(w);
        let ops = &self.ops;
        let vol = ops.current_volumes();
        let mass: Vec<f64> = vol.iter().zip(r).map(|(a, b)| a * b).collect();
        let mflux = match &s.mass_flux {
            Some(m) if m.len() == ops.faces().len() => m.clone(),
            _ => ops.mass_fluxes(r, &u, v),
        };
        let conv = ops.convection(&u, &mflux);
        let gamma = self.params.gamma;
        let p: Vec<f64> = r.iter().map(|x| x.powf(gamma)).collect();
        let kdiag: Vec<f64> = p.iter().zip(&vol).map(|(pi, vi)| dt * gamma * pi / vi).collect();

        let top = |ip: usize| n + g.node(ip, nz);
        let mut free = vec![false; 2 * n];
        for node in 0..n {
            let j = g.node_split(node).1;
            free[node] = j > 0 && j < nz;
            free[n + node] = j > 0;
        }

        let mut rhs: Vec<f64> = (0..2 * n).map(|k| mass[k % n] * u[k] / dt - conv[k]).collect();
        ops.b().mul_transpose_add(&p, &mut rhs);
        if let Some(f) = self.forcing {
            for (k, fm) in f.momentum(t1, &g).iter().enumerate() {
                rhs[k] += vol[k % n] * fm;
            }
        }
        let bil = bilaplacian(&g, w);
        let elastic = force_or_zero(self.model, &s.plate.w)?;
        let quasi = if self.model.is_quasilinear() {
            quasilinear_force(&s.plate.w).into_values()
        } else {
            vec![0.0; np]
        };
        let plate_load = self.forcing.map(|f| f.plate(t1, &g));
        for ip in 0..np {
            let pw = g.plate_weight(ip);
            let mut val = v[ip] / dt - bil[ip] - elastic.values()[ip] - quasi[ip];
            if let Some(l) = &plate_load {
                val += l[ip];
            }
            rhs[top(ip)] += pw * val;
        }
        for (k, rk) in rhs.iter_mut().enumerate() {
            if !free[k] {
                *rk = 0.0;
            }
        }

        let alpha = self.model.alpha;
        let apply = |x: &[f64], y: &mut [f64]| {
            ops.a().mul_vec(x, y);
            for k in 0..2 * n {
                y[k] += mass[k % n] / dt * x[k];
            }
            let mut bx = vec![0.0; n];
            ops.b().mul_vec(x, &mut bx);
            for (b, kd) in bx.iter_mut().zip(&kdiag) {
                *b *= kd;
            }
            ops.b().mul_transpose_add(&bx, y);
            let xv: Vec<f64> = (0..np).map(|ip| x[top(ip)]).collect();
            let lap = laplacian(&g, &xv);
            let bil = laplacian(&g, &lap);
            for ip in 0..np {
                y[top(ip)] += g.plate_weight(ip) * (xv[ip] / dt + dt * bil[ip] - alpha * lap[ip]);
            }
        };
        let project = |x: &mut [f64]| {
            for (xk, f) in x.iter_mut().zip(&free) {
                if !f {
                    *xk = 0.0;
                }
            }
        };
        let mut diag = ops.a().diagonal();
        let bcol = ops.b().weighted_column_squares(&kdiag);
        let (hx, h4) = (g.hx(), g.hx().powi(4));
        for k in 0..2 * n {
            diag[k] += mass[k % n] / dt + bcol[k];
        }
        for ip in 0..np {
            diag[top(ip)] += g.plate_weight(ip) * (1.0 / dt + dt * 6.0 / h4 + 2.0 * alpha / (hx * hx));
        }
        let inv: Vec<f64> = diag
            .iter()
            .zip(&free)
            .map(|(d, f)| if *f && *d > 0.0 { 1.0 / d } else { 0.0 })
            .collect();
        let mut x = u.clone();
        let stats = projected_pcg(apply, project, &inv, &rhs, &mut x, self.config.cg_tol, 20_000)?;
        self.last_iterations = stats.iterations;

        let v_new: Vec<f64> = (0..np).map(|ip| x[top(ip)]).collect();
        let mf_new = ops.mass_fluxes(r, &x, &v_new);
        let div = ops.net_outflow(&mf_new);
        let w_new: Vec<f64> = w.iter().zip(&v_new).map(|(a, b)| a + dt * b).collect();
        let (gap, node) = w_new
            .iter()
            .enumerate()
            .map(|(i, wv)| (1.0 + wv, i))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
        if !gap.is_finite() || gap <= self.config.collision_eps {
            return Err(Error::Collision {
                min_gap: gap,
                node,
                threshold: self.config.collision_eps,
            });
        }
        let vol_new = ops.volumes(&w_new);
        let source = self.forcing.map(|f| f.mass(t1, &g));
        let mut r_new = Vec::with_capacity(n);
        for node in 0..n {
            let mut m = mass[node] - dt * div[node];
            if let Some(src) = &source {
                m += dt * vol_new[node] * src[node];
            }
            let rv = m / vol_new[node];
            if !rv.is_finite() {
                return Err(Error::Divergence(format!("non-finite density at node {node}")));
            }
            if rv < 0.0 {
                return Err(Error::NegativeDensity { node, value: rv });
            }
            if rv < R_FLOOR {
                return Err(Error::Vacuum { node, value: rv });
            }
            r_new.push(rv);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite velocity".into()));
        }

        let theta = match &s.plate.theta {
            Some(th) if self.model.is_thermal() => Some(heat_step(&g, th.values(), &v_new, dt)?),
            other => other.clone(),
        };
        let comps = vec![x[..n].to_vec(), x[n..].to_vec()];
        Ok(CoupledState {
            fluid: FluidState {
                r: ScalarField::from_vec_unchecked(g, r_new),
                u: VectorField::from_vec_unchecked(g, comps),
            },
            plate: PlateState {
                w: PlateField::from_vec_unchecked(g, w_new),
                v: PlateField::from_vec_unchecked(g, v_new),
                theta,
            },
            time: t1,
            mass_flux: Some(mf_new),
        })
    }
}

/// Implicit step of ∂t θ − Δθ − Δ∂t w = 0.
fn heat_step(g: &Grid, theta: &[f64], wt: &[f64], dt: f64) -> Result<PlateField> {
    let lw = laplacian(g, wt);
    let b: Vec<f64> = theta.iter().zip(&lw).map(|(t, l)| t + dt * l).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        let l = laplacian(g, x);
        for k in 0..x.len() {
            y[k] = x[k] - dt * l[k];
        }
    };
    let h = g.hx();
    let dg = 1.0 + dt * 2.0 * (crate::stencil::plate_axes(g) as f64) / (h * h);
    let inv = vec![1.0 / dg; theta.len()];
    let mut x = theta.to_vec();
    projected_pcg(apply, |_| {}, &inv, &b, &mut x, 1e-13, 10_000)?;
    Ok(PlateField::from_vec_unchecked(*g, x))
}

/// One step of size `config.dt`.
pub fn step(state: &CoupledState, config: &SchemeConfig, params: &FluidParams, model: &PlateModel) -> Result<CoupledState> {
    let mut st = Stepper::new(state.grid(), *config, *params, model, None)?;
    st.advance(state, config.dt)
}

/// Snapshots of a run, starting with the initial state.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<CoupledState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> Option<&CoupledState> {
        self.snapshots.last()
    }
}

/// A run that may have stopped early.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub error: Option<Error>,
}

/// Steps from validated initial data to `t_end`.
pub fn run(data: &InitialData, config: &SchemeConfig, params: &FluidParams, model: &PlateModel) -> Result<Trajectory> {
    let out = run_with(data, config, params, model, None)?;
    match out.error {
        Some(e) => Err(e),
        None => Ok(out.trajectory),
    }
}

/// Like [`run`] with optional forcing, keeping the snapshots computed before a failure.
pub fn run_with(
    data: &InitialData,
    config: &SchemeConfig,
    params: &FluidParams,
    model: &PlateModel,
    forcing: Option<&dyn Forcing>,
) -> Result<RunOutcome> {
    let s0 = validate_initial_data(data)?;
    run_from(s0, config, params, model, forcing)
}

/// Steps an existing state to `config.t_end`.
pub fn run_from(
    s0: CoupledState,
    config: &SchemeConfig,
    params: &FluidParams,
    model: &PlateModel,
    forcing: Option<&dyn Forcing>,
) -> Result<RunOutcome> {
    let mut stepper = Stepper::new(s0.grid(), *config, *params, model, forcing)?;
    let (gap, node) = min_gap(&s0.plate.w);
    if gap <= config.collision_eps {
        return Err(Error::Collision {
            min_gap: gap,
            node,
            threshold: config.collision_eps,
        });
    }
    let steps = (config.t_end / config.dt - 1e-9).ceil().max(0.0) as usize;
    let mut traj = Trajectory {
        snapshots: vec![s0.clone()],
    };
    let mut cur = s0;
    let t0 = cur.time;
    for k in 0..steps {
        let target = (t0 + (k + 1) as f64 * config.dt).min(t0 + config.t_end);
        let dt = target - cur.time;
        match stepper.advance(&cur, dt) {
            Ok(mut next) => {
                next.time = target;
                cur = next;
                if (k + 1) % config.snapshot_every == 0 || k + 1 == steps {
                    traj.snapshots.push(cur.clone());
                }
            }
            Err(e) => {
                return Ok(RunOutcome {
                    trajectory: traj,
                    error: Some(e),
                })
            }
        }
    }
    Ok(RunOutcome {
        trajectory: traj,
        error: None,
    })
}

/// Load on the plate, S^w·[(r^γ I − S(∇^w U)) ν^w]·e_d at the top nodes.
pub fn fluid_load(state: &CoupledState, geo: &AleGeometry, params: &FluidParams) -> Result<PlateField> {
    let g = *state.grid();
    g.ensure_same(geo.grid())?;
    let d = g.dim();
    let grad = transformed_gradient_vector(&state.fluid.u, geo)?;
    let sj = surface_jacobian(&geo.w);
    let nu = graph_normal(&geo.w);
    let r = state.fluid.r.values();
    let vals = (0..g.plate_len())
        .map(|ip| {
            let node = g.node(ip, g.nz);
            let s = stress(grad.at(node), d, params);
            let p = r[node].max(0.0).powf(params.gamma);
            let mut t = p * nu[ip][d - 1];
            for b in 0..d {
                t -= s[d - 1][b] * nu[ip][b];
            }
            sj.values()[ip] * t
        })
        .collect();
    Ok(PlateField::from_vec_unchecked(g, vals))
}

/// Tolerance for the discrete admissibility of a test pair.
const ADMISSIBLE_TOL: f64 = 1e-12;

/// Residual of the coupled weak momentum equation for test functions given by
/// their pull-backs q∘A (one per snapshot) and plate parts ψ.
///
/// Integrals are quadratured with the trapezoid rule in space and time;
/// ∂t q is recovered from the pull-back by the chain rule.
pub fn weak_momentum_residual(
    traj: &Trajectory,
    q: &[VectorField],
    psi: &[PlateField],
    params: &FluidParams,
    model: &PlateModel,
) -> Result<f64> {
    let ns = traj.snapshots.len();
    if q.len() != ns || psi.len() != ns {
        return Err(Error::InadmissibleTest(format!(
            "need {ns} test snapshots, got {} and {}",
            q.len(),
            psi.len()
        )));
    }
    if ns < 2 {
        return Err(Error::TooFewSnapshots { needed: 2, got: ns });
    }
    let g = *traj.snapshots[0].grid();
    let d = g.dim();
    let n = g.fluid_len();
    for (k, (qk, pk)) in q.iter().zip(psi).enumerate() {
        g.ensure_same(qk.grid())?;
        g.ensure_same(pk.grid())?;
        let scale = qk.max_abs().max(pk.max_abs()).max(1.0);
        for ip in 0..g.plate_len() {
            let (bot, top) = (g.node(ip, 0), g.node(ip, g.nz));
            for c in 0..d {
                let want = if c == d - 1 { pk.values()[ip] } else { 0.0 };
                if (qk.comp(c)[top] - want).abs() > ADMISSIBLE_TOL * scale || qk.comp(c)[bot].abs() > ADMISSIBLE_TOL * scale {
                    return Err(Error::InadmissibleTest(format!(
                        "snapshot {k}: q must vanish on the bottom and equal psi·e_d on the plate"
                    )));
                }
            }
        }
    }
    let times = traj.times();
    let mut integrand = Vec::with_capacity(ns);
    let mut fluid_mom = Vec::with_capacity(ns);
    let mut plate_mom = Vec::with_capacity(ns);
    for k in 0..ns {
        let s = &traj.snapshots[k];
        let geo = s.geometry()?;
        let gq = transformed_gradient_vector(&q[k], &geo)?;
        let gu = transformed_gradient_vector(&s.fluid.u, &geo)?;
        // ∂t q ∘ A = d/dt(q∘A) − 𝐰·∇^w(q∘A), with one-sided differences at the ends
        let (ka, kb) = if k == 0 {
            (0, 1)
        } else if k == ns - 1 {
            (ns - 2, ns - 1)
        } else {
            (k - 1, k + 1)
        };
        let tdiff = times[kb] - times[ka];
        let (mut lhs, mut mom) = (0.0, 0.0);
        let r = s.fluid.r.values();
        let w = s.plate.w.values();
        for node in 0..n {
            let (ip, _) = g.node_split(node);
            let vol = g.fluid_weight(node) * (1.0 + w[ip]);
            let uu = s.fluid.u.at(node);
            let gqn = gq.at(node);
            let ale = geo.ale_velocity.at(node);
            let mut dq = [0.0; 3];
            for c in 0..d {
                dq[c] = (q[kb].comp(c)[node] - q[ka].comp(c)[node]) / tdiff;
                for b in 0..d {
                    dq[c] -= ale[b] * gqn[c][b];
                }
            }
            let mut val = 0.0;
            for c in 0..d {
                val += r[node] * uu[c] * dq[c];
                mom += vol * r[node] * uu[c] * q[k].comp(c)[node];
                for b in 0..d {
                    val += r[node] * uu[c] * uu[b] * gqn[c][b];
                }
            }
            let divq: f64 = (0..d).map(|a| gqn[a][a]).sum();
            val += r[node].powf(params.gamma) * divq;
            let sg = stress(gu.at(node), d, params);
            for a in 0..d {
                for b in 0..d {
                    val -= sg[a][b] * gqn[a][b];
                }
            }
            lhs += vol * val;
        }
        let vt = s.plate.v.values();
        let lw = laplacian(&g, w);
        let lp = laplacian(&g, psi[k].values());
        let gv = crate::stencil::plate_gradient(&g, vt);
        let gp = crate::stencil::plate_gradient(&g, psi[k].values());
        for ip in 0..g.plate_len() {
            let pw = g.plate_weight(ip);
            let dpsi = (psi[kb].values()[ip] - psi[ka].values()[ip]) / tdiff;
            let grad_dot: f64 = gv.iter().zip(&gp).map(|(a, b)| a[ip] * b[ip]).sum();
            lhs += pw * (vt[ip] * dpsi - lw[ip] * lp[ip] - model.alpha * grad_dot);
        }
        integrand.push(lhs);
        fluid_mom.push(mom);
        plate_mom.push(dot(vt, psi[k].values()) * g.hx());
    }
    let mut total = 0.0;
    for k in 1..ns {
        total += 0.5 * (times[k] - times[k - 1]) * (integrand[k] + integrand[k - 1]);
    }
    let rhs = fluid_mom[ns - 1] - fluid_mom[0] + plate_mom[ns - 1] - plate_mom[0];
    Ok((total - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(nx: usize, nz: usize) -> Grid {
        Grid::periodic(nx, nz, 2.0 * std::f64::consts::PI).unwrap()
    }

    fn data(g: Grid, amp: f64) -> InitialData {
        InitialData {
            rho0: ScalarField::constant(g, 1.0),
            momentum0: VectorField::zeros(g),
            w0: PlateField::from_fn(g, |x, _| amp * x.sin()),
            v0: PlateField::zeros(g),
            theta0: None,
        }
    }

    #[test]
    fn initial_data_checks() {
        let g = flat(8, 4);
        assert!(validate_initial_data(&data(g, 0.0)).is_ok());
        let mut bad = data(g, 0.0);
        bad.w0 = PlateField::constant(g, -1.0);
        assert!(matches!(
            validate_initial_data(&bad),
            Err(Error::InitialData(InitialDataError::PlateBelowBottom { .. }))
        ));
        let mut bad = data(g, 0.0);
        let mut rho = vec![1.0; g.fluid_len()];
        rho[10] = 0.0;
        bad.rho0 = ScalarField::new(g, rho).unwrap();
        bad.momentum0 = VectorField::from_fn(g, |_, _, _| [0.1, 0.0, 0.0]);
        assert!(matches!(
            validate_initial_data(&bad),
            Err(Error::InitialData(InitialDataError::MomentumInVacuum { node: 10, .. }))
        ));
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        // a flat plate carrying the rest pressure needs an equal external load
        struct Hold(f64);
        impl Forcing for Hold {
            fn momentum(&self, _: f64, g: &Grid) -> Vec<f64> {
                vec![0.0; 2 * g.fluid_len()]
            }
            fn mass(&self, _: f64, g: &Grid) -> Vec<f64> {
                vec![0.0; g.fluid_len()]
            }
            fn plate(&self, _: f64, g: &Grid) -> Vec<f64> {
                vec![-self.0; g.plate_len()]
            }
        }
        let g = flat(16, 8);
        let s = CoupledState::equilibrium(g, 1.3);
        let model = PlateModel::linear(0.5);
        let params = FluidParams::default();
        let hold = Hold(1.3f64.powf(params.gamma));
        let cfg = SchemeConfig::new(1e-2, 1e-2);
        let mut st = Stepper::new(&g, cfg, params, &model, Some(&hold)).unwrap();
        let next = st.advance(&s, cfg.dt).unwrap();
        for (a, b) in next.fluid.r.values().iter().zip(s.fluid.r.values()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(next.fluid.u.max_abs() < 1e-13);
        assert!(next.plate.w.max_abs() < 1e-13);

        let free = step(&s, &cfg, &params, &model).unwrap();
        assert!(free.plate.v.values().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn mass_is_conserved_and_coupling_holds() {
        let g = flat(16, 8);
        let s0 = validate_initial_data(&data(g, 0.1)).unwrap();
        let m0 = s0.mass();
        let model = PlateModel::linear(0.0);
        let cfg = SchemeConfig::new(5e-3, 5e-2);
        let traj = run(&data(g, 0.1), &cfg, &FluidParams::default(), &model).unwrap();
        for s in &traj.snapshots {
            assert!((s.mass() - m0).abs() < 1e-12 * m0);
            for ip in 0..g.plate_len() {
                let top = g.node(ip, g.nz);
                assert_eq!(s.fluid.u.comp(0)[top], 0.0);
                assert_eq!(s.fluid.u.comp(1)[top], s.plate.v.values()[ip]);
            }
        }
    }

    #[test]
    fn load_at_rest_is_the_pressure() {
        let g = flat(8, 4);
        let s = CoupledState::equilibrium(g, 1.5);
        let geo = s.geometry().unwrap();
        let load = fluid_load(&s, &geo, &FluidParams::default()).unwrap();
        assert!(load.values().iter().all(|l| (l - 2.25).abs() < 1e-14));
    }

    #[test]
    fn collision_is_reported() {
        let g = flat(16, 8);
        let mut d = data(g, 0.0);
        d.v0 = PlateField::constant(g, -40.0);
        let cfg = SchemeConfig::new(1e-2, 1.0);
        let out = run_with(&d, &cfg, &FluidParams::default(), &PlateModel::linear(0.0), None).unwrap();
        assert!(matches!(out.error, Some(Error::Collision { .. })));
        for s in &out.trajectory.snapshots {
            assert!(s.plate.w.values().iter().all(|v| v.is_finite()));
        }
    }
}
