//! Barotropic compressible fluid on the fixed reference domain: pressure law,
//! Newtonian stress, the pressure potential, and the transformed right-hand sides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fv::FluidOperators;
use crate::geometry::{min_gap, AleGeometry};
use crate::grid::{Mat, ScalarField, TensorField, VectorField};

/// Density floor below which the momentum equation is not evaluated.
pub const R_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidParams {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
}

fn default_gamma() -> f64 {
    2.0
}

fn default_mu() -> f64 {
    1.0
}

impl Default for FluidParams {
    fn default() -> Self {
        FluidParams {
            gamma: 2.0,
            mu: 1.0,
            lambda: 0.0,
        }
    }
}

impl FluidParams {
    pub fn new(gamma: f64, mu: f64, lambda: f64) -> Result<Self> {
        let p = FluidParams { gamma, mu, lambda };
        p.validate()?;
        Ok(p)
    }

    /// γ > 1, μ > 0 and λ + 2μ/3 > 0.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be > 1, got {}", self.gamma)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.lambda + 2.0 * self.mu / 3.0 > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need lambda + 2 mu / 3 > 0, got lambda = {}, mu = {}",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }
}

/// Transformed density r = ρ∘A and velocity U = u∘A.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub r: ScalarField,
    pub u: VectorField,
}

impl FluidState {
    pub fn new(r: ScalarField, u: VectorField) -> Result<Self> {
        r.grid().ensure_same(u.grid())?;
        if let Some((node, &value)) = r.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeDensity { node, value });
        }
        Ok(FluidState { r, u })
    }

    /// Constant density at rest.
    pub fn at_rest(grid: crate::grid::Grid, rho: f64) -> Self {
        FluidState {
            r: ScalarField::constant(grid, rho),
            u: VectorField::zeros(grid),
        }
    }
}

/// p(r) = r^γ nodewise.
pub fn pressure(r: &ScalarField, params: &FluidParams) -> Result<ScalarField> {
    if let Some((node, &value)) = r.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeDensity { node, value });
    }
    Ok(r.map(|v| v.powf(params.gamma)))
}

/// S(G) = μG + (μ+λ) tr(G) I for one d×d block.
pub fn stress(g: &Mat, d: usize, params: &FluidParams) -> Mat {
    let tr: f64 = (0..d).map(|a| g[a][a]).sum();
    let mut s = [[0.0; 3]; 3];
    for a in 0..d {
        for b in 0..d {
            s[a][b] = params.mu * g[a][b];
        }
        s[a][a] += (params.mu + params.lambda) * tr;
    }
    s
}

/// S(∇U) nodewise.
pub fn stress_tensor(grad_u: &TensorField, params: &FluidParams) -> TensorField {
    let d = grad_u.grid().dim();
    let vals = grad_u.values().iter().map(|g| stress(g, d, params)).collect();
    TensorField::from_vec_unchecked(*grad_u.grid(), vals)
}

/// ∂t r from the flux-form discretization of the transformed continuity equation.
pub fn continuity_rhs(state: &FluidState, geo: &AleGeometry) -> Result<ScalarField> {
    let (gap, node) = min_gap(&geo.w);
    if gap <= 0.0 {
        return Err(Error::Collision {
            min_gap: gap,
            node,
            threshold: 0.0,
        });
    }
    let ops = FluidOperators::assembled(geo, &FluidParams::default())?;
    Ok(ScalarField::from_vec_unchecked(
        *geo.grid(),
        ops.continuity_rate(state.r.values(), &flatten(&state.u), geo.wt.values()),
    ))
}

/// ∂t U from the transformed momentum equation (lumped, flux form).
pub fn momentum_rhs(state: &FluidState, geo: &AleGeometry, params: &FluidParams) -> Result<VectorField> {
    if let Some((node, &value)) = state.r.values().iter().enumerate().find(|(_, v)| **v < R_FLOOR) {
        return Err(Error::Vacuum { node, value });
    }
    let ops = FluidOperators::assembled(geo, params)?;
    let rate = ops.momentum_rate(state.r.values(), &flatten(&state.u), geo.wt.values(), params);
    let n = geo.grid().fluid_len();
    Ok(VectorField::from_vec_unchecked(
        *geo.grid(),
        vec![rate[..n].to_vec(), rate[n..].to_vec()],
    ))
}

pub(crate) fn flatten(u: &VectorField) -> Vec<f64> {
    u.comps().iter().flatten().copied().collect()
}

/// f(x, y) = x^γ − γ y^{γ−1}(x − y) − y^γ.
pub fn pressure_potential(x: f64, y: f64, gamma: f64) -> Result<f64> {
    if !(x >= 0.0) || !(y > 0.0) || !(gamma > 1.0) {
        return Err(Error::Domain(format!(
            "pressure potential needs x >= 0, y > 0, gamma > 1; got x = {x}, y = {y}, gamma = {gamma}"
        )));
    }
    Ok(potential_unchecked(x, y, gamma))
}

/// Evaluated as y^γ[(1+t)^γ − 1 − γt] with t = x/y − 1, using the binomial
/// series near the diagonal to avoid cancellation.
pub(crate) fn potential_unchecked(x: f64, y: f64, gamma: f64) -> f64 {
    let t = x / y - 1.0;
    let scale = y.powf(gamma);
    if t.abs() < 1e-2 {
        let mut coef = gamma * (gamma - 1.0) / 2.0;
        let mut tk = t * t;
        let mut sum = coef * tk;
        for k in 3..16 {
            coef *= (gamma - (k - 1) as f64) / k as f64;
            tk *= t;
            sum += coef * tk;
        }
        scale * sum
    } else {
        x.powf(gamma) - gamma * y.powf(gamma - 1.0) * (x - y) - scale
    }
}

/// Constants of the lower bounds f(x,y) ≥ c|x−y|^{2∧γ} on [y/2, 2y] and
/// f(x,y) ≥ c(1 + x^{2∧γ}) outside, over y in a band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialBounds {
    pub c_near: f64,
    pub c_far: f64,
    /// min(c_near, c_far), the single constant valid for both bounds.
    pub c: f64,
    /// True when the near-diagonal bound admits no positive constant (γ < 2).
    pub degenerate: bool,
}

/// Resolution of [`pressure_potential_bounds_with`].
#[derive(Debug, Clone, Copy)]
pub struct BoundScan {
    pub n_y: usize,
    pub n_x: usize,
    /// Far-field scan extends to x = far_factor · 2y.
    pub far_factor: f64,
}

impl Default for BoundScan {
    fn default() -> Self {
        BoundScan {
            n_y: 64,
            n_x: 10_000,
            far_factor: 1e4,
        }
    }
}

/// Relative margin applied to the scanned infimum.
const SCAN_MARGIN: f64 = 1e-6;

pub fn pressure_potential_bounds(c_r2: f64, cap_r2: f64, gamma: f64) -> Result<PotentialBounds> {
    pressure_potential_bounds_with(c_r2, cap_r2, gamma, BoundScan::default())
}

/// Near-diagonal ratio f/|x−y|^p and its diagonal limit.
pub(crate) fn near_ratio(x: f64, y: f64, gamma: f64) -> f64 {
    let p = gamma.min(2.0);
    let dx = (x - y).abs();
    if dx == 0.0 {
        if gamma >= 2.0 {
            0.5 * gamma * (gamma - 1.0) * y.powf(gamma - 2.0)
        } else {
            0.0
        }
    } else {
        potential_unchecked(x, y, gamma) / dx.powf(p)
    }
}

pub(crate) fn far_ratio(x: f64, y: f64, gamma: f64) -> f64 {
    let p = gamma.min(2.0);
    potential_unchecked(x, y, gamma) / (1.0 + x.powf(p))
}

/// Limit of the far ratio as x → ∞.
fn far_limit(gamma: f64) -> f64 {
    if gamma > 2.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

pub fn pressure_potential_bounds_with(
    c_r2: f64,
    cap_r2: f64,
    gamma: f64,
    scan: BoundScan,
) -> Result<PotentialBounds> {
    if !(c_r2 > 0.0 && cap_r2 >= c_r2) || !(gamma > 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < c_r2 <= C_r2 and gamma > 1, got {c_r2}, {cap_r2}, {gamma}"
        )));
    }
    let ys: Vec<f64> = if cap_r2 == c_r2 {
        vec![c_r2]
    } else {
        (0..scan.n_y)
            .map(|k| c_r2 + (cap_r2 - c_r2) * k as f64 / (scan.n_y - 1) as f64)
            .collect()
    };
    let (mut near, mut far) = (f64::INFINITY, far_limit(gamma));
    let n_near = scan.n_x / 2;
    let n_far = scan.n_x - n_near;
    for &y in &ys {
        for i in 0..=n_near {
            let x = 0.5 * y + 1.5 * y * i as f64 / n_near as f64;
            near = near.min(near_ratio(x, y, gamma));
        }
        near = near.min(near_ratio(y, y, gamma));
        // below the band: uniform on [0, y/2]; above: geometric on [2y, far_factor·2y]
        let n_lo = n_far / 4;
        let n_hi = n_far - n_lo;
        for i in 0..=n_lo {
            let x = 0.5 * y * i as f64 / n_lo as f64;
            far = far.min(far_ratio(x, y, gamma));
        }
        for i in 0..=n_hi {
            let x = 2.0 * y * scan.far_factor.powf(i as f64 / n_hi as f64);
            far = far.min(far_ratio(x, y, gamma));
        }
    }
    let degenerate = near <= 0.0;
    let near = near.max(0.0) * (1.0 - SCAN_MARGIN);
    let far = far * (1.0 - SCAN_MARGIN);
    Ok(PotentialBounds {
        c_near: near,
        c_far: far,
        c: near.min(far),
        degenerate,
    })
}

/// Infimum of f(x, y)/|x − y|² over r₂/2 ≤ x ≤ 2r₂ and y in the band,
/// scanned like [`pressure_potential_bounds`].
pub fn quadratic_near_constant(c_r2: f64, cap_r2: f64, gamma: f64) -> Result<f64> {
    if !(c_r2 > 0.0 && cap_r2 >= c_r2) || !(gamma > 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < c_r2 <= C_r2 and gamma > 1, got {c_r2}, {cap_r2}, {gamma}"
        )));
    }
    let scan = BoundScan::default();
    let mut inf = f64::INFINITY;
    for k in 0..scan.n_y {
        let y = c_r2 + (cap_r2 - c_r2) * k as f64 / (scan.n_y - 1) as f64;
        inf = inf.min(0.5 * gamma * (gamma - 1.0) * y.powf(gamma - 2.0));
        for i in 0..=scan.n_x {
            let x = 0.5 * y + 1.5 * y * i as f64 / scan.n_x as f64;
            if x != y {
                inf = inf.min(potential_unchecked(x, y, gamma) / (x - y).powi(2));
            }
        }
    }
    Ok(inf * (1.0 - SCAN_MARGIN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, IDENTITY};

    #[test]
    fn params_are_validated() {
        assert!(FluidParams::new(2.0, 1.0, 0.0).is_ok());
        assert!(FluidParams::new(1.0, 1.0, 0.0).is_err());
        assert!(FluidParams::new(2.0, 0.0, 0.0).is_err());
        assert!(FluidParams::new(2.0, 1.0, -0.7).is_err());
    }

    #[test]
    fn pressure_examples() {
        let g = Grid::periodic(4, 4, 1.0).unwrap();
        let p = FluidParams::default();
        assert!(pressure(&ScalarField::constant(g, 1.0), &p).unwrap().values().iter().all(|&v| v == 1.0));
        assert!(pressure(&ScalarField::constant(g, 2.0), &p).unwrap().values().iter().all(|&v| v == 4.0));
        assert!(pressure(&ScalarField::constant(g, 0.0), &p).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(pressure(&ScalarField::constant(g, -1.0), &p).is_err());
    }

    #[test]
    fn stress_examples() {
        let p = FluidParams::default();
        let s = stress(&IDENTITY, 2, &p);
        assert_eq!(s[0][0], 3.0);
        assert_eq!(s[1][1], 3.0);
        assert_eq!(s[0][1], 0.0);
        let anti = [[0.0, 2.0, 0.0], [-2.0, 0.0, 0.0], [0.0; 3]];
        let p2 = FluidParams::new(2.0, 0.7, 0.4).unwrap();
        let s = stress(&anti, 2, &p2);
        assert!((s[0][1] - 1.4).abs() < 1e-15 && (s[1][0] + 1.4).abs() < 1e-15);
        assert_eq!(s[0][0], 0.0);
    }

    #[test]
    fn potential_examples() {
        assert_eq!(pressure_potential(2.0, 1.0, 2.0).unwrap(), 1.0);
        assert_eq!(pressure_potential(0.0, 1.0, 2.0).unwrap(), 1.0);
        for c in [0.3, 1.0, 2.5] {
            assert!(pressure_potential(c, c, 1.7).unwrap().abs() < 1e-14);
        }
        assert!(pressure_potential(-1.0, 1.0, 2.0).is_err());
        assert!(pressure_potential(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn bounds_examples() {
        let b = pressure_potential_bounds(1.0, 1.0, 2.0).unwrap();
        assert!((b.c_near - 1.0).abs() < 1e-5);
        // x = 2 gives 1/5, and so does x = 1/2 below the band
        assert!((b.c_far - 0.2).abs() < 1e-5);
        assert!(!b.degenerate);
        let b = pressure_potential_bounds(0.5, 2.0, 1.5).unwrap();
        assert!(b.degenerate);
        assert_eq!(b.c, 0.0);
    }
}
