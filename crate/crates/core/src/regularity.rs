//! Fractional difference quotients and the norms built on them.
//!
//! D_{h,e}^s q(y) = (q(y + he) − q(y)) / h^s. Periodic plates wrap the shift;
//! on a clamped plate every quantity is restricted to
//! Γ_h = {y : dist(y, ∂Γ) > h}.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::grid::{Grid, PlateField, Topology};
use crate::stencil::{laplacian, plate_axes, plate_shift};

/// Default shifts, in multiples of hx.
pub const DEFAULT_H_DECADES: [usize; 5] = [1, 2, 4, 8, 16];
/// Default bound on the growth ratio across shifts.
pub const DEFAULT_RATIO_BOUND: f64 = 10.0;
/// Default ε for evaluating an L^{b⁻} norm at p = b(1 − ε).
pub const DEFAULT_LEBESGUE_EPS: f64 = 0.05;

/// The exponent standing in for "every p < b".
pub fn lebesgue_minus(b: f64, eps: f64) -> f64 {
    b * (1.0 - eps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalParams {
    pub s: f64,
    pub q_int: f64,
    pub h: f64,
    /// Plate axis of the shift (0 = x, 1 = y).
    pub direction: usize,
}

impl FractionalParams {
    pub fn new(s: f64, q_int: f64, h: f64, direction: usize) -> Self {
        FractionalParams { s, q_int, h, direction }
    }
}

/// Shift in grid steps; `h` must be a positive multiple of the spacing.
fn shift_steps(g: &Grid, h: f64, axis: usize) -> Result<usize> {
    let step = if axis == 0 { g.hx() } else { g.hy() };
    let m = (h / step).round();
    if !(h > 0.0) || m < 1.0 || (h - m * step).abs() > 1e-9 * step.max(h) {
        return Err(Error::ShiftNotOnGrid { h, hx: step });
    }
    Ok(m as usize)
}

/// Nodes of Γ_h for a shift of `m` steps (all nodes when periodic).
fn interior(g: &Grid, m: usize) -> Vec<bool> {
    (0..g.plate_len())
        .map(|ip| {
            if g.topology == Topology::Periodic {
                return true;
            }
            let (i, k) = g.plate_coords(ip);
            let inside = |pos: usize, n: usize| pos > m && pos + m < n;
            inside(i, g.nx) && (g.ny == 0 || inside(k, g.ny))
        })
        .collect()
}

/// Quotient values and the Γ_h mask, with the shift sign `sign` = ±1.
fn quotient(f: &PlateField, s: f64, h: f64, axis: usize, sign: isize) -> Result<(Vec<f64>, Vec<bool>)> {
    let g = *f.grid();
    if axis >= plate_axes(&g) {
        return Err(Error::Dimension(format!("plate has no axis {axis}")));
    }
    let m = shift_steps(&g, h, axis)?;
    let mask = interior(&g, m);
    let hs = h.powf(s);
    let v = f.values();
    let out = (0..g.plate_len())
        .map(|ip| {
            if !mask[ip] {
                return 0.0;
            }
            let q = plate_shift(&g, ip, axis, sign * m as isize).expect("Γ_h keeps the shift inside");
            (v[q] - v[ip]) / hs
        })
        .collect();
    Ok((out, mask))
}

/// D_h^s g at every node, zero outside Γ_h.
pub fn diff_quotient(g: &PlateField, p: &FractionalParams) -> Result<PlateField> {
    if !(p.s > 0.0 && p.s <= 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {}", p.s)));
    }
    let (v, _) = quotient(g, p.s, p.h, p.direction, 1)?;
    Ok(PlateField::from_vec_unchecked(*g.grid(), v))
}

fn lq_masked(g: &Grid, v: &[f64], mask: Option<&[bool]>, q: f64) -> f64 {
    let sum: f64 = (0..g.plate_len())
        .filter(|ip| mask.is_none_or(|m| m[*ip]))
        .map(|ip| g.plate_weight(ip) * v[ip].abs().powf(q))
        .sum();
    sum.powf(1.0 / q)
}

/// ‖f‖_{L^q(Γ)} by trapezoid quadrature.
pub fn lq_norm(f: &PlateField, q: f64) -> f64 {
    lq_masked(f.grid(), f.values(), None, q)
}

/// sup over lattice directions and shifts of ‖D_h^s g‖_{L^q(Γ_h)}, plus ‖g‖_{L^q}.
pub fn nikolskii_norm(g: &PlateField, s: f64, q_int: f64, h_set: &[f64]) -> Result<f64> {
    if h_set.is_empty() {
        return Err(Error::EmptyShiftSet);
    }
    check_exponents(s, q_int)?;
    let grid = *g.grid();
    let mut sup = 0.0f64;
    for axis in 0..plate_axes(&grid) {
        for &h in h_set {
            let (v, mask) = quotient(g, s, h, axis, 1)?;
            sup = sup.max(lq_masked(&grid, &v, Some(&mask), q_int));
        }
    }
    Ok(sup + lq_norm(g, q_int))
}

fn check_exponents(s: f64, q: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (0, 1), got {s}")));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must lie in [1, ∞), got {q}")));
    }
    Ok(())
}

/// ‖g‖_{L^q} + (∫∫ |g(x) − g(y)|^q / |x − y|^{n + sq})^{1/q}, the double sum
/// skipping the diagonal; distances wrap on a periodic plate.
pub fn gagliardo_norm(g: &PlateField, s: f64, q_int: f64) -> Result<f64> {
    check_exponents(s, q_int)?;
    let grid = *g.grid();
    let n = plate_axes(&grid) as f64;
    let v = g.values();
    let np = grid.plate_len();
    let coords: Vec<(f64, f64)> = (0..np)
        .map(|ip| {
            let (i, k) = grid.plate_coords(ip);
            (grid.x(i), if grid.ny == 0 { 0.0 } else { grid.y(k) })
        })
        .collect();
    let wrap = |d: f64, len: f64| {
        if grid.topology == Topology::Periodic {
            let d = d.abs() % len;
            d.min(len - d)
        } else {
            d.abs()
        }
    };
    let ly = if grid.ny == 0 { 1.0 } else { grid.ly };
    let weights: Vec<f64> = (0..np).map(|ip| grid.plate_weight(ip)).collect();
    let mut sum = 0.0;
    for a in 0..np {
        for b in (a + 1)..np {
            let dx = wrap(coords[a].0 - coords[b].0, grid.lx);
            let dy = wrap(coords[a].1 - coords[b].1, ly);
            let r = (dx * dx + dy * dy).sqrt();
            sum += 2.0 * weights[a] * weights[b] * (v[a] - v[b]).abs().powf(q_int) / r.powf(n + s * q_int);
        }
    }
    Ok(lq_norm(g, q_int) + sum.powf(1.0 / q_int))
}

/// |−∫f D_{−h}^s D_h^s g − ∫D_h^s f D_h^s g| on a periodic plate, along x.
///
/// The negative shift divides by sgn(h)|h|^s, so D_{−h}^1 is the backward
/// difference and the identity carries the minus sign.
pub fn summation_by_parts_residual(f: &PlateField, g: &PlateField, s: f64, h: f64) -> Result<f64> {
    let grid = *f.grid();
    grid.ensure_same(g.grid())?;
    if grid.topology != Topology::Periodic {
        return Err(Error::NotPeriodic);
    }
    let (dg, _) = quotient(g, s, h, 0, 1)?;
    let (df, _) = quotient(f, s, h, 0, 1)?;
    let dg_field = PlateField::from_vec_unchecked(grid, dg.clone());
    let (ddg, _) = quotient(&dg_field, s, h, 0, -1)?;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for ip in 0..grid.plate_len() {
        let w = grid.plate_weight(ip);
        // ddg holds (v(x−h) − v(x))/|h|^s, the negative of D_{−h}^s v
        lhs += w * f.values()[ip] * ddg[ip];
        rhs += w * df[ip] * dg[ip];
    }
    Ok((lhs - rhs).abs())
}

fn check_gamma(gamma: f64, d: usize, alpha_positive: bool) -> Result<()> {
    let bound = match (d, alpha_positive) {
        (2, _) => 1.0,
        (3, false) => 12.0 / 7.0,
        (3, true) => 1.5,
        _ => return Err(Error::Dimension(format!("d must be 2 or 3, got {d}"))),
    };
    if !(gamma > bound) || !gamma.is_finite() {
        return Err(Error::InadmissibleGamma {
            gamma,
            d,
            alpha_positive,
            bound,
        });
    }
    Ok(())
}

/// Supremum of the s for which Δw ∈ L²(0,T; H^s(Γ)) is available.
pub fn threshold_s(gamma: f64, d: usize, alpha_positive: bool) -> Result<f64> {
    check_gamma(gamma, d, alpha_positive)?;
    Ok(match (d, alpha_positive) {
        (2, false) => (0.5 - 0.5 / gamma).min(0.25),
        (2, true) => (0.75 - 0.5 / gamma).min(0.5),
        (3, false) => (7.0 / 12.0 - 1.0 / gamma).min(0.25),
        _ => (2.0 / 3.0 - 1.0 / gamma).min(0.5),
    })
}

/// [`threshold_s`] in exact rational arithmetic.
pub fn threshold_s_exact(gamma: Ratio<i64>, d: usize, alpha_positive: bool) -> Result<Ratio<i64>> {
    let gf = *gamma.numer() as f64 / *gamma.denom() as f64;
    let r = |n: i64, m: i64| Ratio::new(n, m);
    let bound = match (d, alpha_positive) {
        (2, _) => r(1, 1),
        (3, false) => r(12, 7),
        (3, true) => r(3, 2),
        _ => return Err(Error::Dimension(format!("d must be 2 or 3, got {d}"))),
    };
    if gamma <= bound {
        return Err(Error::InadmissibleGamma {
            gamma: gf,
            d,
            alpha_positive,
            bound: *bound.numer() as f64 / *bound.denom() as f64,
        });
    }
    let inv = gamma.recip();
    let (v, cap) = match (d, alpha_positive) {
        (2, false) => (r(1, 2) - inv / 2, r(1, 4)),
        (2, true) => (r(3, 4) - inv / 2, r(1, 2)),
        (3, false) => (r(7, 12) - inv, r(1, 4)),
        _ => (r(2, 3) - inv, r(1, 2)),
    };
    Ok(v.min(cap))
}

#[derive(Debug, Clone)]
pub struct RegularityScan {
    pub s_grid: Vec<f64>,
    pub h_values: Vec<f64>,
    /// ∫₀^T ‖D_h^s Δw‖²_{L²} for [s][h], maximized over lattice directions.
    pub norms: Vec<Vec<f64>>,
    /// Largest growth N(h)/N(h') over pairs h < h', per s; 1 when all vanish.
    pub ratios: Vec<f64>,
    pub ratio_bound: f64,
    /// Largest s in the grid whose ratio stays within the bound.
    pub threshold: Option<f64>,
}

impl RegularityScan {
    pub fn ratio_for(&self, s: f64) -> Option<f64> {
        self.s_grid.iter().position(|x| (x - s).abs() < 1e-12).map(|k| self.ratios[k])
    }
}

/// Time integral of a per-snapshot quantity by the trapezoid rule.
fn time_integral(times: &[f64], f: &[f64]) -> f64 {
    if times.len() == 1 {
        return 0.0;
    }
    times
        .windows(2)
        .zip(f.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// h-uniformity of ‖D_h^s Δw‖²_{L²(Γ_T)} across the shifts `h_decades`.
pub fn regularity_scan(
    times: &[f64],
    w_trajectory: &[PlateField],
    s_grid: &[f64],
    h_decades: &[f64],
    ratio_bound: f64,
) -> Result<RegularityScan> {
    if times.len() != w_trajectory.len() {
        return Err(Error::Dimension(format!(
            "{} times for {} snapshots",
            times.len(),
            w_trajectory.len()
        )));
    }
    let Some(first) = w_trajectory.first() else {
        return Err(Error::TooFewSnapshots { needed: 1, got: 0 });
    };
    if h_decades.is_empty() {
        return Err(Error::EmptyShiftSet);
    }
    let g = *first.grid();
    let laps: Vec<PlateField> = w_trajectory
        .iter()
        .map(|w| {
            g.ensure_same(w.grid())?;
            Ok(PlateField::from_vec_unchecked(g, laplacian(&g, w.values())))
        })
        .collect::<Result<_>>()?;
    let mut hs = h_decades.to_vec();
    hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut norms = Vec::with_capacity(s_grid.len());
    let mut ratios = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("s must lie in (0, 1), got {s}")));
        }
        let mut row = Vec::with_capacity(hs.len());
        for &h in &hs {
            let mut best = 0.0f64;
            for axis in 0..plate_axes(&g) {
                let per_t: Vec<f64> = laps
                    .iter()
                    .map(|l| {
                        let (v, mask) = quotient(l, s, h, axis, 1)?;
                        Ok(lq_masked(&g, &v, Some(&mask), 2.0).powi(2))
                    })
                    .collect::<Result<_>>()?;
                best = best.max(time_integral(times, &per_t));
            }
            row.push(best);
        }
        let mut ratio = 1.0f64;
        for a in 0..row.len() {
            for b in (a + 1)..row.len() {
                if row[a] > 0.0 {
                    ratio = ratio.max(if row[b] > 0.0 { row[a] / row[b] } else { f64::INFINITY });
                }
            }
        }
        norms.push(row);
        ratios.push(ratio);
    }
    let threshold = s_grid
        .iter()
        .zip(&ratios)
        .filter(|(_, r)| **r <= ratio_bound)
        .map(|(s, _)| *s)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
    Ok(RegularityScan {
        s_grid: s_grid.to_vec(),
        h_values: hs,
        norms,
        ratios,
        ratio_bound,
        threshold,
    })
}

/// ∫₀^T ∫_Γ |D_h^{s/2} Δw|⁴, the quantity controlled for the quasilinear plate.
pub fn quartic_quantity(times: &[f64], w_trajectory: &[PlateField], s: f64, h: f64) -> Result<f64> {
    if times.len() != w_trajectory.len() || times.is_empty() {
        return Err(Error::Dimension("times and snapshots must match and be nonempty".into()));
    }
    let per_t: Vec<f64> = w_trajectory
        .iter()
        .map(|w| {
            let g = *w.grid();
            let l = PlateField::from_vec_unchecked(g, laplacian(&g, w.values()));
            let (v, mask) = quotient(&l, 0.5 * s, h, 0, 1)?;
            Ok(lq_masked(&g, &v, Some(&mask), 4.0).powi(4))
        })
        .collect::<Result<_>>()?;
    Ok(time_integral(times, &per_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quotient_examples() {
        let g = Grid::new(4, 4, 2.0, Topology::Clamped).unwrap();
        let sq = PlateField::from_fn(g, |y, _| y * y);
        let q = diff_quotient(&sq, &FractionalParams::new(0.5, 2.0, 0.5, 0)).unwrap();
        assert!((q.values()[2] - 1.25 / 0.5f64.sqrt()).abs() < 1e-14);
        assert_eq!(q.values()[0], 0.0);
        let lin = PlateField::from_fn(g, |y, _| y);
        let q = diff_quotient(&lin, &FractionalParams::new(1.0, 2.0, 0.5, 0)).unwrap();
        assert!((q.values()[2] - 1.0).abs() < 1e-14);
        let c = PlateField::constant(g, 3.0);
        assert_eq!(diff_quotient(&c, &FractionalParams::new(0.5, 2.0, 0.5, 0)).unwrap().max_abs(), 0.0);
        assert!(matches!(
            diff_quotient(&c, &FractionalParams::new(0.5, 2.0, 0.3, 0)),
            Err(Error::ShiftNotOnGrid { .. })
        ));
    }

    #[test]
    fn nikolskii_examples() {
        let g = Grid::periodic(64, 4, 2.0 * PI).unwrap();
        let h = [g.hx(), 2.0 * g.hx()];
        assert_eq!(nikolskii_norm(&PlateField::zeros(g), 0.5, 2.0, &h).unwrap(), 0.0);
        let c = nikolskii_norm(&PlateField::constant(g, 2.0), 0.5, 2.0, &h).unwrap();
        assert!((c - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!(matches!(nikolskii_norm(&PlateField::zeros(g), 0.5, 2.0, &[]), Err(Error::EmptyShiftSet)));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_s(2.0, 2, false).unwrap(), 0.25);
        assert_eq!(threshold_s(2.0, 2, true).unwrap(), 0.5);
        assert!((threshold_s(2.0, 3, true).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(threshold_s_exact(Ratio::new(2, 1), 3, true).unwrap(), Ratio::new(1, 6));
        assert!(matches!(threshold_s(1.5, 3, false), Err(Error::InadmissibleGamma { .. })));
        assert!(threshold_s(1.0, 2, false).is_err());
    }

    #[test]
    fn zero_trajectory_scan_passes() {
        let g = Grid::periodic(32, 4, 2.0 * PI).unwrap();
        let traj = vec![PlateField::zeros(g); 3];
        let h: Vec<f64> = DEFAULT_H_DECADES.iter().map(|m| *m as f64 * g.hx()).collect();
        let scan = regularity_scan(&[0.0, 0.5, 1.0], &traj, &[0.25, 0.5, 0.75], &h, DEFAULT_RATIO_BOUND).unwrap();
        assert!(scan.norms.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(scan.threshold, Some(0.75));
    }
}
