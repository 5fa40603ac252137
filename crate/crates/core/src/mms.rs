//! Manufactured solutions for convergence studies.
//!
//! The exact fields are given in physical coordinates on the moving domain
//! {−1 < y < w(t, x)}, with η = (y + 1)/(1 + w) ∈ [0, 1]:
//!
//! - w = a·sin(x − t)
//! - ρ = 1 + b·cos(x − t)·(1 + η)/2
//! - u₁ = c·η(1 − η)·sin(x)·cos(t), u₂ = η·∂t w
//!
//! so that u vanishes on the bottom and equals (0, ∂t w) on the plate. The
//! sources are the residuals of the equations, differentiated numerically.

use crate::coupling::{run_with, CoupledState, Forcing, InitialData, SchemeConfig};
use crate::error::{Error, Result};
use crate::fluid::{stress, FluidParams};
use crate::grid::{Grid, Mat, PlateField, ScalarField, VectorField};
use crate::plate::PlateModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub plate_amp: f64,
    pub density_amp: f64,
    pub velocity_amp: f64,
    pub params: FluidParams,
    pub alpha: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Manufactured {
            plate_amp: 0.05,
            density_amp: 0.1,
            velocity_amp: 0.2,
            params: FluidParams::default(),
            alpha: 0.0,
        }
    }
}

/// Step for first derivatives of the exact fields.
const H1: f64 = 1e-4;
/// Step for the nested second derivatives.
const H2: f64 = 1e-3;
/// Step for the plate's fourth derivative.
const H4: f64 = 1e-2;

fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

impl Manufactured {
    pub fn w(&self, t: f64, x: f64) -> f64 {
        self.plate_amp * (x - t).sin()
    }

    pub fn wt(&self, t: f64, x: f64) -> f64 {
        -self.plate_amp * (x - t).cos()
    }

    fn eta(&self, t: f64, x: f64, y: f64) -> f64 {
        (y + 1.0) / (1.0 + self.w(t, x))
    }

    pub fn rho(&self, t: f64, x: f64, y: f64) -> f64 {
        let e = self.eta(t, x, y);
        1.0 + self.density_amp * (x - t).cos() * 0.5 * (1.0 + e)
    }

    pub fn u(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let e = self.eta(t, x, y);
        [
            self.velocity_amp * e * (1.0 - e) * x.sin() * t.cos(),
            e * self.wt(t, x),
        ]
    }

    /// ∇u with rows as components.
    fn grad_u(&self, t: f64, x: f64, y: f64, h: f64) -> Mat {
        let mut g = [[0.0; 3]; 3];
        for c in 0..2 {
            g[c][0] = d1(|s| self.u(t, s, y)[c], x, h);
            g[c][1] = d1(|s| self.u(t, x, s)[c], y, h);
        }
        g
    }

    fn stress_at(&self, t: f64, x: f64, y: f64, h: f64) -> Mat {
        stress(&self.grad_u(t, x, y, h), 2, &self.params)
    }

    /// Mass source ∂tρ + ∇·(ρu).
    pub fn mass_source(&self, t: f64, x: f64, y: f64) -> f64 {
        let flux = |t: f64, x: f64, y: f64, c: usize| self.rho(t, x, y) * self.u(t, x, y)[c];
        d1(|s| self.rho(s, x, y), t, H1) + d1(|s| flux(t, s, y, 0), x, H1) + d1(|s| flux(t, x, s, 1), y, H1)
    }

    /// Momentum source ∂t(ρu) + ∇·(ρu⊗u) + ∇ρ^γ − ∇·S(∇u).
    pub fn momentum_source(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let gamma = self.params.gamma;
        let m = |t: f64, x: f64, y: f64, c: usize| self.rho(t, x, y) * self.u(t, x, y)[c];
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate() {
            let conv = |x: f64, y: f64, b: usize| m(t, x, y, c) * self.u(t, x, y)[b];
            *o = d1(|s| m(s, x, y, c), t, H1)
                + d1(|s| conv(s, y, 0), x, H1)
                + d1(|s| conv(x, s, 1), y, H1)
                - d1(|s| self.stress_at(t, s, y, H2)[c][0], x, H2)
                - d1(|s| self.stress_at(t, x, s, H2)[c][1], y, H2);
            *o += if c == 0 {
                d1(|s| self.rho(t, s, y).powf(gamma), x, H1)
            } else {
                d1(|s| self.rho(t, x, s).powf(gamma), y, H1)
            };
        }
        out
    }

    /// Fluid load S_w[(pI − S)ν]·e₂ on the plate.
    pub fn load(&self, t: f64, x: f64) -> f64 {
        let y = self.w(t, x);
        let wx = d1(|s| self.w(t, s), x, H1);
        let s = self.stress_at(t, x, y, H2);
        self.rho(t, x, y).powf(self.params.gamma) - (s[1][0] * -wx + s[1][1])
    }

    /// Plate source ∂t²w + ∂x⁴w − α∂t∂x²w − load.
    pub fn plate_source(&self, t: f64, x: f64) -> f64 {
        let wtt = d1(|s| self.wt(s, x), t, H1);
        let h = H4;
        let w = |s: f64| self.w(t, s);
        let d4 = (-(w(x + 3.0 * h) + w(x - 3.0 * h)) + 12.0 * (w(x + 2.0 * h) + w(x - 2.0 * h))
            - 39.0 * (w(x + h) + w(x - h))
            + 56.0 * w(x))
            / (6.0 * h.powi(4));
        let wt = |s: f64| self.wt(t, s);
        let wtxx = (-(wt(x + 2.0 * h) + wt(x - 2.0 * h)) + 16.0 * (wt(x + h) + wt(x - h)) - 30.0 * wt(x)) / (12.0 * h * h);
        wtt + d4 - self.alpha * wtxx - self.load(t, x)
    }

    /// Physical height of reference node (x, z) at time t.
    fn height(&self, t: f64, x: f64, z: f64) -> f64 {
        (z + 1.0) * (1.0 + self.w(t, x)) - 1.0
    }

    /// Exact state sampled on the grid nodes.
    pub fn exact_state(&self, g: &Grid, t: f64) -> Result<CoupledState> {
        let d = self.initial_like(g, t)?;
        let mut s = crate::coupling::validate_initial_data(&d)?;
        s.time = t;
        Ok(s)
    }

    fn initial_like(&self, g: &Grid, t: f64) -> Result<InitialData> {
        if g.dim() != 2 || !g.is_periodic() {
            return Err(Error::Unsupported("manufactured solutions need a periodic 2D grid".into()));
        }
        let rho = ScalarField::from_fn(*g, |x, _, z| self.rho(t, x, self.height(t, x, z)));
        let mom = VectorField::from_fn(*g, |x, _, z| {
            let y = self.height(t, x, z);
            let r = self.rho(t, x, y);
            let u = self.u(t, x, y);
            [r * u[0], r * u[1], 0.0]
        });
        Ok(InitialData {
            rho0: rho,
            momentum0: mom,
            w0: PlateField::from_fn(*g, |x, _| self.w(t, x)),
            v0: PlateField::from_fn(*g, |x, _| self.wt(t, x)),
            theta0: None,
        })
    }

    pub fn initial_data(&self, g: &Grid) -> Result<InitialData> {
        self.initial_like(g, 0.0)
    }

    /// Discrete L² distance to the exact solution: fluid fields weighted by
    /// the node volumes, plate fields by the plate weights.
    pub fn error(&self, s: &CoupledState) -> Result<f64> {
        let g = *s.grid();
        let ex = self.exact_state(&g, s.time)?;
        let mut sum = 0.0;
        for node in 0..g.fluid_len() {
            let ip = g.node_split(node).0;
            let v = g.fluid_weight(node) * (1.0 + ex.plate.w.values()[ip]);
            sum += v * (s.fluid.r.values()[node] - ex.fluid.r.values()[node]).powi(2);
            for c in 0..2 {
                sum += v * (s.fluid.u.comp(c)[node] - ex.fluid.u.comp(c)[node]).powi(2);
            }
        }
        for ip in 0..g.plate_len() {
            let pw = g.plate_weight(ip);
            sum += pw * (s.plate.w.values()[ip] - ex.plate.w.values()[ip]).powi(2);
            sum += pw * (s.plate.v.values()[ip] - ex.plate.v.values()[ip]).powi(2);
        }
        Ok(sum.sqrt())
    }
}

impl Forcing for Manufactured {
    fn momentum(&self, t: f64, g: &Grid) -> Vec<f64> {
        let n = g.fluid_len();
        let mut out = vec![0.0; 2 * n];
        for node in 0..n {
            let (ip, j) = g.node_split(node);
            let x = g.x(ip);
            let f = self.momentum_source(t, x, self.height(t, x, g.z(j)));
            out[node] = f[0];
            out[n + node] = f[1];
        }
        out
    }

    fn mass(&self, t: f64, g: &Grid) -> Vec<f64> {
        (0..g.fluid_len())
            .map(|node| {
                let (ip, j) = g.node_split(node);
                let x = g.x(ip);
                self.mass_source(t, x, self.height(t, x, g.z(j)))
            })
            .collect()
    }

    fn plate(&self, t: f64, g: &Grid) -> Vec<f64> {
        (0..g.plate_len()).map(|ip| self.plate_source(t, g.x(ip))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub nx: Vec<usize>,
    pub dt: Vec<f64>,
    pub errors: Vec<f64>,
    /// log₂ of successive error ratios.
    pub orders: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Runs the manufactured problem on nx = nz ∈ `levels` with dt ≈ cfl·hx and
/// reports the final-time errors.
pub fn convergence_study(m: &Manufactured, levels: &[usize], cfl: f64, t_end: f64) -> Result<ConvergenceStudy> {
    let model = PlateModel::linear(m.alpha);
    let mut errors = Vec::new();
    let mut dts = Vec::new();
    let Some(&n0) = levels.first() else {
        return Err(Error::InvalidParameter("no refinement levels".into()));
    };
    let lx = 2.0 * std::f64::consts::PI;
    let steps0 = (t_end / (cfl * lx / n0 as f64)).ceil();
    for &n in levels {
        let g = Grid::periodic(n, n, lx)?;
        // dt scales exactly with hx so that (dt, hx) refine jointly
        let dt = t_end / (steps0 * n as f64 / n0 as f64);
        let mut cfg = SchemeConfig::new(dt, t_end);
        cfg.snapshot_every = usize::MAX;
        let out = run_with(&m.initial_data(&g)?, &cfg, &m.params, &model, Some(m))?;
        if let Some(e) = out.error {
            return Err(e);
        }
        let last = out.trajectory.last().expect("run keeps the final state");
        errors.push(m.error(last)?);
        dts.push(dt);
    }
    let orders = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    Ok(ConvergenceStudy {
        nx: levels.to_vec(),
        dt: dts,
        errors,
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_state_meets_the_boundary_conditions() {
        let m = Manufactured::default();
        let g = Grid::periodic(16, 8, 2.0 * std::f64::consts::PI).unwrap();
        let s = m.exact_state(&g, 0.3).unwrap();
        for ip in 0..g.plate_len() {
            let top = g.node(ip, g.nz);
            let x = g.x(ip);
            let y = m.w(0.3, x);
            assert!((m.u(0.3, x, y)[1] - s.plate.v.values()[ip]).abs() < 1e-14);
            assert!(m.u(0.3, x, y)[0].abs() < 1e-14);
            assert_eq!(s.fluid.u.comp(1)[top], s.plate.v.values()[ip]);
        }
    }

    #[test]
    fn rest_state_has_no_sources() {
        let m = Manufactured {
            plate_amp: 0.0,
            density_amp: 0.0,
            velocity_amp: 0.0,
            ..Default::default()
        };
        assert!(m.mass_source(0.2, 1.0, -0.5).abs() < 1e-9);
        let f = m.momentum_source(0.2, 1.0, -0.5);
        assert!(f[0].abs() < 1e-8 && f[1].abs() < 1e-8);
        // the plate must carry the rest pressure
        assert!((m.plate_source(0.2, 1.0) + 1.0).abs() < 1e-8);
    }
}
