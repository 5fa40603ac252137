//! Plate operators: Δ², nonlinear elastic forces, the Airy problem, the
//! quasilinear and thermal terms, and empirical checks of the structural assumptions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, PlateField, Topology};
use crate::linalg::BandedCholesky;
use crate::spectral::sobolev_norm;
use crate::stencil::{
    cell_measure, forward_cells, forward_gradient, forward_gradient_adjoint, laplacian, mixed_difference,
    plate_derivative, second_difference,
};

/// Scalar nonlinearity f in the Kirchhoff force, with its primitive Φ(s) = ∫₀^s f.
#[derive(Clone)]
pub enum ScalarLaw {
    /// f(s) = s³
    Cubic,
    /// f(s) = s
    Linear,
    /// f(s) = |s|^{p−1} s
    OddPower(f64),
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        primitive: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for ScalarLaw {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarLaw::Cubic => write!(fm, "Cubic"),
            ScalarLaw::Linear => write!(fm, "Linear"),
            ScalarLaw::OddPower(p) => write!(fm, "OddPower({p})"),
            ScalarLaw::Custom { .. } => write!(fm, "Custom"),
        }
    }
}

impl ScalarLaw {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ScalarLaw::Cubic => s * s * s,
            ScalarLaw::Linear => s,
            ScalarLaw::OddPower(p) => s.abs().powf(p - 1.0) * s,
            ScalarLaw::Custom { f, .. } => f(s),
        }
    }

    pub fn primitive(&self, s: f64) -> f64 {
        match self {
            ScalarLaw::Cubic => 0.25 * s.powi(4),
            ScalarLaw::Linear => 0.5 * s * s,
            ScalarLaw::OddPower(p) => s.abs().powf(p + 1.0) / (p + 1.0),
            ScalarLaw::Custom { primitive, .. } => primitive(s),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KirchhoffParams {
    pub nu_k: f64,
    pub q_exp: f64,
    pub r_exp: f64,
    pub mu_k: f64,
    pub law: ScalarLaw,
    pub h: Option<PlateField>,
}

#[derive(Debug, Clone)]
pub struct VonKarmanParams {
    pub f0: PlateField,
    pub h: Option<PlateField>,
}

#[derive(Debug, Clone)]
pub struct BergerParams {
    pub nu_b: f64,
    pub g: f64,
    pub h: Option<PlateField>,
}

/// Semilinear elastic force F(w).
#[derive(Debug, Clone)]
pub enum ElasticForce {
    Kirchhoff(KirchhoffParams),
    VonKarman(VonKarmanParams),
    Berger(BergerParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateKind {
    Linear,
    Kirchhoff,
    VonKarman,
    Berger,
    ThermoSemilinear,
    ThermoQuasilinear,
}

impl PlateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlateKind::Linear => "linear",
            PlateKind::Kirchhoff => "kirchhoff",
            PlateKind::VonKarman => "von_karman",
            PlateKind::Berger => "berger",
            PlateKind::ThermoSemilinear => "thermo_semilinear",
            PlateKind::ThermoQuasilinear => "thermo_quasilinear",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlateModel {
    pub kind: PlateKind,
    pub alpha: f64,
    pub force: Option<ElasticForce>,
}

impl PlateModel {
    pub fn new(kind: PlateKind, alpha: f64, force: Option<ElasticForce>) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        let consistent = match (kind, &force) {
            (PlateKind::Linear | PlateKind::ThermoQuasilinear, None) => true,
            (PlateKind::Kirchhoff, Some(ElasticForce::Kirchhoff(_))) => true,
            (PlateKind::VonKarman, Some(ElasticForce::VonKarman(_))) => true,
            (PlateKind::Berger, Some(ElasticForce::Berger(_))) => true,
            (PlateKind::ThermoSemilinear, _) => true,
            _ => false,
        };
        if !consistent {
            return Err(Error::InvalidParameter(format!(
                "force coefficients do not match plate kind {}",
                kind.as_str()
            )));
        }
        if let Some(ElasticForce::Kirchhoff(k)) = &force {
            if !(k.nu_k >= 0.0) {
                return Err(Error::InvalidParameter(format!("nu_k must be >= 0, got {}", k.nu_k)));
            }
            if !(k.q_exp > k.r_exp && k.r_exp >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "need q_exp > r_exp >= 0, got q_exp = {}, r_exp = {}",
                    k.q_exp, k.r_exp
                )));
            }
        }
        if let Some(ElasticForce::Berger(b)) = &force {
            if !(b.nu_b > 0.0) {
                return Err(Error::InvalidParameter(format!("nu_b must be > 0, got {}", b.nu_b)));
            }
        }
        Ok(PlateModel { kind, alpha, force })
    }

    pub fn linear(alpha: f64) -> Self {
        PlateModel {
            kind: PlateKind::Linear,
            alpha,
            force: None,
        }
    }

    pub fn is_thermal(&self) -> bool {
        matches!(self.kind, PlateKind::ThermoSemilinear | PlateKind::ThermoQuasilinear)
    }

    pub fn is_quasilinear(&self) -> bool {
        self.kind == PlateKind::ThermoQuasilinear
    }
}

/// Plate displacement, velocity and optional temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateState {
    pub w: PlateField,
    pub v: PlateField,
    pub theta: Option<PlateField>,
}

pub fn bilaplacian(w: &PlateField) -> PlateField {
    PlateField::from_vec_unchecked(*w.grid(), crate::stencil::bilaplacian(w.grid(), w.values()))
}

pub fn plate_laplacian(w: &PlateField) -> PlateField {
    PlateField::from_vec_unchecked(*w.grid(), laplacian(w.grid(), w.values()))
}

fn subtract_load(mut out: Vec<f64>, h: &Option<PlateField>) -> Vec<f64> {
    if let Some(h) = h {
        for (o, hv) in out.iter_mut().zip(h.values()) {
            *o -= hv;
        }
    }
    out
}

fn kirchhoff_force(k: &KirchhoffParams, w: &PlateField) -> Vec<f64> {
    let g = w.grid();
    let cells = forward_cells(g);
    let grad = forward_gradient(g, w.values(), &cells);
    let flux: Vec<Vec<f64>> = grad
        .iter()
        .map(|comp| {
            comp.iter()
                .enumerate()
                .map(|(c, gc)| {
                    let m = grad.iter().map(|a| a[c] * a[c]).sum::<f64>().sqrt();
                    k.nu_k * (m.powf(k.q_exp) - k.mu_k * m.powf(k.r_exp)) * gc
                })
                .collect()
        })
        .collect();
    let div = forward_gradient_adjoint(g, &flux, &cells);
    let out = div
        .iter()
        .zip(w.values())
        .map(|(d, &wv)| d + k.law.eval(wv))
        .collect();
    subtract_load(out, &k.h)
}

fn dirichlet_energy(w: &PlateField) -> (f64, Vec<f64>) {
    let g = w.grid();
    let cells = forward_cells(g);
    let grad = forward_gradient(g, w.values(), &cells);
    let integral = cell_measure(g) * grad.iter().flatten().map(|v| v * v).sum::<f64>();
    // −Δ_h w = D₊ᵀ D₊ w
    let neg_lap = forward_gradient_adjoint(g, &grad, &cells);
    (integral, neg_lap)
}

fn berger_force(b: &BergerParams, w: &PlateField) -> Vec<f64> {
    let (i, neg_lap) = dirichlet_energy(w);
    let coef = b.nu_b * i - b.g;
    subtract_load(neg_lap.iter().map(|l| coef * l).collect(), &b.h)
}

fn von_karman_force(v: &VonKarmanParams, w: &PlateField) -> Result<Vec<f64>> {
    let airy = airy_stress(w)?;
    let total = airy.zip_map(&v.f0, |a, b| a + b);
    let br = vk_bracket(w, &total)?;
    Ok(subtract_load(br.values().iter().map(|b| -b).collect(), &v.h))
}

/// F(w) for a given elastic force law.
pub fn elastic_force(force: &ElasticForce, w: &PlateField) -> Result<PlateField> {
    let vals = match force {
        ElasticForce::Kirchhoff(k) => kirchhoff_force(k, w),
        ElasticForce::Berger(b) => berger_force(b, w),
        ElasticForce::VonKarman(v) => von_karman_force(v, w)?,
    };
    Ok(PlateField::from_vec_unchecked(*w.grid(), vals))
}

/// F(w) of the model.
pub fn nonlinear_force(model: &PlateModel, w: &PlateField) -> Result<PlateField> {
    match (&model.kind, &model.force) {
        (PlateKind::Linear, _) | (PlateKind::ThermoQuasilinear, _) => Err(Error::Unsupported(format!(
            "plate kind {} has no semilinear force",
            model.kind.as_str()
        ))),
        (_, Some(f)) => elastic_force(f, w),
        (_, None) => Ok(PlateField::zeros(*w.grid())),
    }
}

/// F(w), or zero for models without a semilinear force.
pub(crate) fn force_or_zero(model: &PlateModel, w: &PlateField) -> Result<PlateField> {
    match &model.force {
        Some(f) => elastic_force(f, w),
        None => Ok(PlateField::zeros(*w.grid())),
    }
}

/// Von Kármán bracket [w, u] = w₁₁u₂₂ + w₂₂u₁₁ − 2w₁₂u₁₂.
pub fn vk_bracket(w: &PlateField, u: &PlateField) -> Result<PlateField> {
    let g = *w.grid();
    g.ensure_same(u.grid())?;
    if g.ny == 0 {
        return Err(Error::Dimension("the von Karman bracket needs a two-dimensional plate".into()));
    }
    let (w11, w22, w12) = (
        second_difference(&g, w.values(), 0),
        second_difference(&g, w.values(), 1),
        mixed_difference(&g, w.values()),
    );
    let (u11, u22, u12) = (
        second_difference(&g, u.values(), 0),
        second_difference(&g, u.values(), 1),
        mixed_difference(&g, u.values()),
    );
    let vals = (0..g.plate_len())
        .map(|i| w11[i] * u22[i] + w22[i] * u11[i] - 2.0 * w12[i] * u12[i])
        .collect();
    Ok(PlateField::from_vec_unchecked(g, vals))
}

fn interior_nodes(g: &Grid) -> Vec<usize> {
    (0..g.plate_len()).filter(|&ip| !g.is_plate_boundary(ip)).collect()
}

/// Factorization of the clamped Δ² restricted to interior nodes.
pub struct ClampedBilaplacian {
    grid: Grid,
    interior: Vec<usize>,
    factor: BandedCholesky,
}

impl ClampedBilaplacian {
    pub fn new(g: &Grid) -> Result<Self> {
        if g.topology != Topology::Clamped {
            return Err(Error::Unsupported("clamped bilaplacian on a periodic plate".into()));
        }
        let interior = interior_nodes(g);
        let n = interior.len();
        let row_len = g.plate_nx() - 2;
        let bw = if g.ny == 0 { 2 } else { 2 * row_len };
        let mut pos = vec![usize::MAX; g.plate_len()];
        for (a, &ip) in interior.iter().enumerate() {
            pos[ip] = a;
        }
        // probe the stencil column by column; only |i − j| ≤ bw is kept
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut e = vec![0.0; g.plate_len()];
        for (a, &ip) in interior.iter().enumerate() {
            e[ip] = 1.0;
            let col = crate::stencil::bilaplacian(g, &e);
            e[ip] = 0.0;
            for (q, v) in col.iter().enumerate() {
                if *v != 0.0 && pos[q] != usize::MAX {
                    cols[a].push((pos[q], *v));
                }
            }
        }
        let lookup = |i: usize, j: usize| -> f64 {
            cols[j].iter().find(|(r, _)| *r == i).map(|(_, v)| *v).unwrap_or(0.0)
        };
        let factor = BandedCholesky::factor(n, bw, lookup)?;
        Ok(ClampedBilaplacian {
            grid: *g,
            interior,
            factor,
        })
    }

    /// Solves Δ²v = f on interior nodes with v = ∂ν v = 0 on the boundary.
    pub fn solve(&self, f: &[f64]) -> PlateField {
        let rhs: Vec<f64> = self.interior.iter().map(|&ip| f[ip]).collect();
        let x = self.factor.solve(&rhs);
        let mut v = vec![0.0; self.grid.plate_len()];
        for (a, &ip) in self.interior.iter().enumerate() {
            v[ip] = x[a];
        }
        PlateField::from_vec_unchecked(self.grid, v)
    }
}

/// Airy stress v solving Δ²v = −[w, w] with clamped data.
pub fn airy_stress(w: &PlateField) -> Result<PlateField> {
    let g = *w.grid();
    if g.ny == 0 {
        return Err(Error::Dimension("the Airy problem needs a two-dimensional plate".into()));
    }
    let br = vk_bracket(w, w)?;
    let solver = ClampedBilaplacian::new(&g)?;
    let src: Vec<f64> = br.values().iter().map(|b| -b).collect();
    let v = solver.solve(&src);
    if v.values().iter().any(|x| !x.is_finite()) {
        return Err(Error::SolverBreakdown("non-finite Airy solution".into()));
    }
    Ok(v)
}

/// Relative plug-back residual ‖Δ²v + [w,w]‖ / ‖[w,w]‖ over interior nodes.
pub fn airy_residual(w: &PlateField, v: &PlateField) -> Result<f64> {
    let g = *w.grid();
    let br = vk_bracket(w, w)?;
    let b2 = bilaplacian(v);
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for ip in interior_nodes(&g) {
        num = num.max((b2.values()[ip] + br.values()[ip]).abs());
        den = den.max(br.values()[ip].abs());
    }
    Ok(if den == 0.0 { num } else { num / den })
}

fn load_work(h: &Option<PlateField>, w: &PlateField) -> f64 {
    h.as_ref().map(|h| h.inner(w)).unwrap_or(0.0)
}

/// Π(w) for a force law with a stated potential.
pub fn force_potential(force: &ElasticForce, w: &PlateField) -> Result<f64> {
    match force {
        ElasticForce::Kirchhoff(k) => {
            let g = w.grid();
            let cells = forward_cells(g);
            let grad = forward_gradient(g, w.values(), &cells);
            let mut grad_part = 0.0;
            for c in 0..cells.len() {
                let m = grad.iter().map(|a| a[c] * a[c]).sum::<f64>().sqrt();
                grad_part += k.nu_k / (k.q_exp + 2.0) * m.powf(k.q_exp + 2.0)
                    - k.nu_k * k.mu_k / (k.r_exp + 2.0) * m.powf(k.r_exp + 2.0);
            }
            let phi = w.map(|s| k.law.primitive(s)).integral();
            Ok(phi + cell_measure(g) * grad_part - load_work(&k.h, w))
        }
        ElasticForce::Berger(b) => {
            let (i, _) = dirichlet_energy(w);
            Ok(0.25 * b.nu_b * i * i - 0.5 * b.g * i - load_work(&b.h, w))
        }
        ElasticForce::VonKarman(_) => Err(Error::Unsupported("no stated potential for the von Karman force".into())),
    }
}

/// Π(w); zero for models without a semilinear force.
pub fn potential(model: &PlateModel, w: &PlateField) -> Result<f64> {
    match (&model.kind, &model.force) {
        (PlateKind::ThermoQuasilinear, _) => Err(Error::Unsupported(
            "the quasilinear term is handled by quasilinear_potential".into(),
        )),
        (_, Some(f)) => force_potential(f, w),
        (_, None) => Ok(0.0),
    }
}

/// ‖Δ_h w‖²_{L²}.
pub fn laplacian_norm_sq(w: &PlateField) -> f64 {
    let l = plate_laplacian(w);
    l.inner(&l)
}

#[derive(Debug, Clone)]
pub struct A3Report {
    /// κ‖Δw‖² + Π(w) + C* per sample.
    pub values: Vec<f64>,
    pub violations: Vec<usize>,
    pub min_value: f64,
}

impl A3Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates κ‖Δw‖² + Π(w) + C* ≥ 0 on every sample.
pub fn check_a3(model: &PlateModel, kappa: f64, c_star: f64, samples: &[PlateField]) -> Result<A3Report> {
    if !(kappa > 0.0 && kappa < 0.5) || !(c_star >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need kappa in (0, 1/2) and C* >= 0, got {kappa}, {c_star}"
        )));
    }
    let mut values = Vec::with_capacity(samples.len());
    for w in samples {
        values.push(kappa * laplacian_norm_sq(w) + potential(model, w)? + c_star);
    }
    let violations: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v < 0.0)
        .map(|(i, _)| i)
        .collect();
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(A3Report {
        values,
        violations,
        min_value,
    })
}

/// Δ((Δw)³).
pub fn quasilinear_force(w: &PlateField) -> PlateField {
    let g = *w.grid();
    let cube: Vec<f64> = laplacian(&g, w.values()).iter().map(|l| l * l * l).collect();
    PlateField::from_vec_unchecked(g, laplacian(&g, &cube))
}

/// ¼∫(Δw)⁴.
pub fn quasilinear_potential(w: &PlateField) -> f64 {
    0.25 * plate_laplacian(w).map(|l| l.powi(4)).integral()
}

/// Δθ + Δ∂t w, the right side of the heat equation.
pub fn heat_rhs(state: &PlateState, wt: &PlateField) -> Result<PlateField> {
    let theta = state.theta.as_ref().ok_or(Error::MissingTemperature)?;
    let g = *theta.grid();
    g.ensure_same(wt.grid())?;
    let a = laplacian(&g, theta.values());
    let b = laplacian(&g, wt.values());
    Ok(PlateField::from_vec_unchecked(g, a.iter().zip(&b).map(|(x, y)| x + y).collect()))
}

#[derive(Debug, Clone)]
pub struct LipschitzReport {
    /// Ratio per pair; `None` for pairs excluded (identical members or outside the ball).
    pub ratios: Vec<Option<f64>>,
    pub max_ratio: f64,
    pub excluded_identical: usize,
    pub excluded_outside_ball: usize,
}

/// Empirical local Lipschitz constant of F from H² to H^{−a} on the ball of radius `radius`.
pub fn lipschitz_probe(
    model: &PlateModel,
    radius: f64,
    a: f64,
    pairs: &[(PlateField, PlateField)],
) -> Result<LipschitzReport> {
    let mut ratios = Vec::with_capacity(pairs.len());
    let (mut identical, mut outside) = (0, 0);
    let mut max_ratio = 0.0f64;
    for (w1, w2) in pairs {
        if sobolev_norm(w1, 2.0)? > radius || sobolev_norm(w2, 2.0)? > radius {
            outside += 1;
            ratios.push(None);
            continue;
        }
        let diff = w1.zip_map(w2, |x, y| x - y);
        let den = sobolev_norm(&diff, 2.0)?;
        if den == 0.0 {
            identical += 1;
            ratios.push(None);
            continue;
        }
        let f1 = force_or_zero(model, w1)?;
        let f2 = force_or_zero(model, w2)?;
        let num = sobolev_norm(&f1.zip_map(&f2, |x, y| x - y), -a)?;
        let r = num / den;
        max_ratio = max_ratio.max(r);
        ratios.push(Some(r));
    }
    Ok(LipschitzReport {
        ratios,
        max_ratio,
        excluded_identical: identical,
        excluded_outside_ball: outside,
    })
}

/// Normal slope of a clamped field at boundary node `ip` (one-sided, second order).
pub(crate) fn clamped_normal_slope(w: &PlateField, ip: usize) -> f64 {
    let g = w.grid();
    let (i, k) = g.plate_coords(ip);
    let mut s = 0.0f64;
    if i == 0 || i == g.nx {
        s = s.max(plate_derivative(g, w.values(), 0)[ip].abs());
    }
    if g.ny != 0 && (k == 0 || k == g.ny) {
        s = s.max(plate_derivative(g, w.values(), 1)[ip].abs());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic(n: usize) -> Grid {
        Grid::periodic(n, 4, 2.0 * PI).unwrap()
    }

    fn berger(nu: f64, g: f64, h: Option<PlateField>) -> PlateModel {
        PlateModel::new(
            PlateKind::Berger,
            0.0,
            Some(ElasticForce::Berger(BergerParams { nu_b: nu, g, h })),
        )
        .unwrap()
    }

    fn kirchhoff(nu: f64, law: ScalarLaw) -> PlateModel {
        PlateModel::new(
            PlateKind::Kirchhoff,
            0.0,
            Some(ElasticForce::Kirchhoff(KirchhoffParams {
                nu_k: nu,
                q_exp: 2.0,
                r_exp: 0.0,
                mu_k: 0.5,
                law,
                h: None,
            })),
        )
        .unwrap()
    }

    #[test]
    fn bilaplacian_of_sine_is_second_order() {
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = periodic(n);
            let w = PlateField::from_fn(g, |x, _| x.sin());
            let b = bilaplacian(&w);
            let e = b.values().iter().zip(w.values()).map(|(a, s)| (a - s).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] < 2e-2);
        assert!((errs[0] / errs[1]).log2() > 1.9);
        assert_eq!(bilaplacian(&PlateField::zeros(periodic(16))).max_abs(), 0.0);
    }

    #[test]
    fn clamped_bilaplacian_is_exact_for_cubics_in_the_deep_interior() {
        let g = Grid::new(12, 4, 1.0, Topology::Clamped).unwrap();
        let w = PlateField::from_fn(g, |x, _| 1.0 + 2.0 * x - 3.0 * x * x + 0.7 * x * x * x);
        let b = bilaplacian(&w);
        for i in 2..=10 {
            assert!(b.values()[i].abs() < 1e-6, "node {i}: {}", b.values()[i]);
        }
    }

    #[test]
    fn berger_examples() {
        let g = periodic(256);
        let m = berger(1.0, 0.0, None);
        assert_eq!(nonlinear_force(&m, &PlateField::zeros(g)).unwrap().max_abs(), 0.0);
        let h = PlateField::from_fn(g, |x, _| x.cos());
        let mh = berger(1.0, 0.0, Some(h.clone()));
        let f = nonlinear_force(&mh, &PlateField::zeros(g)).unwrap();
        for (a, b) in f.values().iter().zip(h.values()) {
            assert_eq!(*a, -b);
        }
        let w = PlateField::from_fn(g, |x, _| x.sin());
        let f = nonlinear_force(&m, &w).unwrap();
        for (i, v) in f.values().iter().enumerate() {
            assert!((v - PI * g.x(i).sin()).abs() < 1e-3);
        }
        assert!((potential(&m, &w).unwrap() - 0.25 * PI * PI).abs() < 1e-3);
        assert_eq!(potential(&m, &PlateField::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn kirchhoff_examples() {
        let g = periodic(32);
        let m = kirchhoff(0.0, ScalarLaw::Cubic);
        let f = nonlinear_force(&m, &PlateField::constant(g, 2.0)).unwrap();
        assert!(f.values().iter().all(|&v| v == 8.0));
        let ml = kirchhoff(0.0, ScalarLaw::Linear);
        let p = potential(&ml, &PlateField::constant(g, 1.0)).unwrap();
        assert!((p - PI).abs() < 1e-12);
        let gc = Grid::new(10, 4, 3.0, Topology::Clamped).unwrap();
        let p = potential(&ml, &PlateField::constant(gc, 1.0)).unwrap();
        assert!((p - 1.5).abs() < 1e-12);
    }

    #[test]
    fn linear_model_has_no_force() {
        let g = periodic(16);
        assert!(nonlinear_force(&PlateModel::linear(0.0), &PlateField::zeros(g)).is_err());
        assert_eq!(potential(&PlateModel::linear(0.0), &PlateField::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn kirchhoff_exponents_are_validated() {
        let bad = PlateModel::new(
            PlateKind::Kirchhoff,
            0.0,
            Some(ElasticForce::Kirchhoff(KirchhoffParams {
                nu_k: 1.0,
                q_exp: 1.0,
                r_exp: 1.0,
                mu_k: 0.0,
                law: ScalarLaw::Cubic,
                h: None,
            })),
        );
        assert!(bad.is_err());
        assert!(PlateModel::new(PlateKind::Linear, -1.0, None).is_err());
    }

    fn plate2d(n: usize, topology: Topology) -> Grid {
        Grid::new_3d(n, n, 4, 1.0, 1.0, topology).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let g = plate2d(8, Topology::Clamped);
        let xy = PlateField::from_fn(g, |x, y| x * y);
        let b = vk_bracket(&xy, &xy).unwrap();
        let x2 = PlateField::from_fn(g, |x, _| x * x);
        let y2 = PlateField::from_fn(g, |_, y| y * y);
        let c = vk_bracket(&x2, &y2).unwrap();
        for ip in 0..g.plate_len() {
            if !g.is_plate_boundary(ip) {
                assert!((b.values()[ip] + 2.0).abs() < 1e-10);
                assert!((c.values()[ip] - 4.0).abs() < 1e-10);
            }
        }
        assert!(vk_bracket(&PlateField::zeros(periodic(8)), &PlateField::zeros(periodic(8))).is_err());
    }

    #[test]
    fn airy_examples() {
        let g = plate2d(10, Topology::Clamped);
        assert_eq!(airy_stress(&PlateField::zeros(g)).unwrap().max_abs(), 0.0);
        let lin = PlateField::from_fn(g, |x, y| 0.3 * x - 0.2 * y + 1.0);
        assert!(airy_stress(&lin).unwrap().max_abs() < 1e-12);
        let w = PlateField::from_fn(g, |x, y| (PI * x).sin().powi(2) * (PI * y).sin().powi(2));
        let v = airy_stress(&w).unwrap();
        assert!(airy_residual(&w, &v).unwrap() < 1e-10);
        for ip in 0..g.plate_len() {
            if g.is_plate_boundary(ip) {
                assert_eq!(v.values()[ip], 0.0);
            }
        }
    }

    #[test]
    fn quasilinear_examples() {
        let g = periodic(128);
        assert_eq!(quasilinear_force(&PlateField::zeros(g)).max_abs(), 0.0);
        let w = PlateField::from_fn(g, |x, _| x.sin());
        let q = quasilinear_force(&w);
        // (−sin)³ = −¾ sin + ¼ sin 3x, so Δ of it is ¾ sin − (9/4) sin 3x
        for (i, v) in q.values().iter().enumerate() {
            let x = g.x(i);
            assert!((v - (0.75 * x.sin() - 2.25 * (3.0 * x).sin())).abs() < 1e-2);
        }
        let gc = Grid::new(12, 4, 1.0, Topology::Clamped).unwrap();
        let quad = PlateField::from_fn(gc, |x, _| 1.5 * x * x);
        let qq = quasilinear_force(&quad);
        for i in 2..=10 {
            assert!(qq.values()[i].abs() < 1e-8);
        }
    }

    #[test]
    fn heat_rhs_examples() {
        let g = periodic(64);
        let st = |theta: PlateField| PlateState {
            w: PlateField::zeros(g),
            v: PlateField::zeros(g),
            theta: Some(theta),
        };
        let r = heat_rhs(&st(PlateField::constant(g, 2.0)), &PlateField::zeros(g)).unwrap();
        assert!(r.max_abs() < 1e-12);
        let sine = PlateField::from_fn(g, |x, _| x.sin());
        let r1 = heat_rhs(&st(sine.clone()), &PlateField::zeros(g)).unwrap();
        let r2 = heat_rhs(&st(PlateField::zeros(g)), &sine).unwrap();
        for i in 0..g.plate_len() {
            assert!((r1.values()[i] + g.x(i).sin()).abs() < 1e-3);
            assert!((r2.values()[i] + g.x(i).sin()).abs() < 1e-3);
        }
        let no_theta = PlateState {
            w: PlateField::zeros(g),
            v: PlateField::zeros(g),
            theta: None,
        };
        assert_eq!(heat_rhs(&no_theta, &sine), Err(Error::MissingTemperature));
    }

    #[test]
    fn a3_checks() {
        let g = periodic(64);
        let samples: Vec<PlateField> = (0..20)
            .map(|m| PlateField::from_fn(g, |x, _| 0.1 * m as f64 * (x + m as f64).sin()))
            .collect();
        let r = check_a3(&berger(1.0, 0.0, None), 0.25, 0.0, &samples).unwrap();
        assert!(r.passed());
        let r = check_a3(&PlateModel::linear(0.0), 0.25, 0.0, &samples).unwrap();
        assert!(r.passed());
        // Π = (ν/4)I² − (G/2)I ≥ −G²/(4ν)
        let (nu, gg) = (1.0, 2.0);
        let m = berger(nu, gg, None);
        let ok = check_a3(&m, 1e-6, gg * gg / (4.0 * nu), &samples).unwrap();
        assert!(ok.passed());
        let bad = check_a3(&m, 1e-6, 0.0, &samples).unwrap();
        assert!(!bad.passed());
    }

    #[test]
    fn lipschitz_examples() {
        let g = periodic(32);
        let pairs: Vec<(PlateField, PlateField)> = (1..6)
            .map(|m| {
                (
                    PlateField::from_fn(g, |x, _| 0.05 * (m as f64 * x).sin()),
                    PlateField::from_fn(g, |x, _| 0.05 * (x + 0.3 * m as f64).cos()),
                )
            })
            .collect();
        let r = lipschitz_probe(&PlateModel::linear(0.0), 10.0, 1.0, &pairs).unwrap();
        assert_eq!(r.max_ratio, 0.0);
        let same = vec![(pairs[0].0.clone(), pairs[0].0.clone())];
        let r = lipschitz_probe(&berger(1.0, 0.0, None), 10.0, 1.0, &same).unwrap();
        assert_eq!(r.excluded_identical, 1);
        let r = lipschitz_probe(&berger(1.0, 0.0, None), 10.0, 1.0, &pairs).unwrap();
        assert!(r.max_ratio.is_finite() && r.max_ratio > 0.0);
    }
}
