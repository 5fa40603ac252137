//! Finite-difference stencils on the plate grid Γ.
//!
//! Periodic plates wrap around. Clamped plates use one-sided second-order
//! first derivatives at the boundary and the reflected ghost `w_{-1} = w_1`
//! (which encodes ∂ν w = 0) for second differences.

use crate::grid::{Grid, Topology};

/// Index of the neighbour at offset `off` along `axis` (0 = x, 1 = y).
/// Returns `None` outside a clamped plate.
#[inline]
pub(crate) fn plate_shift(grid: &Grid, ip: usize, axis: usize, off: isize) -> Option<usize> {
    let (i, k) = grid.plate_coords(ip);
    let (n_axis, pos) = if axis == 0 {
        (grid.plate_nx(), i)
    } else {
        (grid.plate_ny(), k)
    };
    let p = pos as isize + off;
    let q = match grid.topology {
        Topology::Periodic => p.rem_euclid(n_axis as isize) as usize,
        Topology::Clamped => {
            if p < 0 || p >= n_axis as isize {
                return None;
            }
            p as usize
        }
    };
    Some(if axis == 0 {
        grid.plate_index(q, k)
    } else {
        grid.plate_index(i, q)
    })
}

/// Neighbour with ghost reflection about the clamped boundary.
#[inline]
fn reflected(grid: &Grid, ip: usize, axis: usize, off: isize) -> usize {
    match plate_shift(grid, ip, axis, off) {
        Some(q) => q,
        None => plate_shift(grid, ip, axis, -off).expect("grid has at least 4 cells"),
    }
}

pub(crate) fn plate_axes(grid: &Grid) -> usize {
    grid.dim() - 1
}

fn axis_h(grid: &Grid, axis: usize) -> f64 {
    if axis == 0 {
        grid.hx()
    } else {
        grid.hy()
    }
}

/// First derivative along `axis`: centered, one-sided second order at a clamped edge.
pub fn plate_derivative(grid: &Grid, w: &[f64], axis: usize) -> Vec<f64> {
    let h = axis_h(grid, axis);
    (0..grid.plate_len())
        .map(|ip| {
            let p = plate_shift(grid, ip, axis, 1);
            let m = plate_shift(grid, ip, axis, -1);
            match (m, p) {
                (Some(m), Some(p)) => (w[p] - w[m]) / (2.0 * h),
                (None, Some(p)) => {
                    let p2 = plate_shift(grid, ip, axis, 2).unwrap();
                    (-3.0 * w[ip] + 4.0 * w[p] - w[p2]) / (2.0 * h)
                }
                (Some(m), None) => {
                    let m2 = plate_shift(grid, ip, axis, -2).unwrap();
                    (3.0 * w[ip] - 4.0 * w[m] + w[m2]) / (2.0 * h)
                }
                (None, None) => unreachable!(),
            }
        })
        .collect()
}

/// Plate gradient, one entry per axis.
pub fn plate_gradient(grid: &Grid, w: &[f64]) -> Vec<Vec<f64>> {
    (0..plate_axes(grid)).map(|a| plate_derivative(grid, w, a)).collect()
}

/// Second difference along `axis` (ghost-reflected on clamped plates).
pub fn second_difference(grid: &Grid, w: &[f64], axis: usize) -> Vec<f64> {
    let h2 = axis_h(grid, axis).powi(2);
    (0..grid.plate_len())
        .map(|ip| {
            let p = reflected(grid, ip, axis, 1);
            let m = reflected(grid, ip, axis, -1);
            (w[p] - 2.0 * w[ip] + w[m]) / h2
        })
        .collect()
}

/// Discrete Laplacian: sum of 3-point second differences.
pub fn laplacian(grid: &Grid, w: &[f64]) -> Vec<f64> {
    let mut out = second_difference(grid, w, 0);
    for axis in 1..plate_axes(grid) {
        for (o, v) in out.iter_mut().zip(second_difference(grid, w, axis)) {
            *o += v;
        }
    }
    out
}

/// Δ² as the composition of two Laplacians.
pub fn bilaplacian(grid: &Grid, w: &[f64]) -> Vec<f64> {
    laplacian(grid, &laplacian(grid, w))
}

/// Mixed second difference ∂x∂y (centered, ghost-reflected).
pub fn mixed_difference(grid: &Grid, w: &[f64]) -> Vec<f64> {
    let (hx, hy) = (grid.hx(), grid.hy());
    (0..grid.plate_len())
        .map(|ip| {
            let xp = reflected(grid, ip, 0, 1);
            let xm = reflected(grid, ip, 0, -1);
            let pp = reflected(grid, xp, 1, 1);
            let pm = reflected(grid, xp, 1, -1);
            let mp = reflected(grid, xm, 1, 1);
            let mm = reflected(grid, xm, 1, -1);
            (w[pp] - w[pm] - w[mp] + w[mm]) / (4.0 * hx * hy)
        })
        .collect()
}

/// Cells carrying forward differences: plate nodes (periodic) or the lower-left
/// corners of the clamped cells.
pub(crate) fn forward_cells(grid: &Grid) -> Vec<usize> {
    match grid.topology {
        Topology::Periodic => (0..grid.plate_len()).collect(),
        Topology::Clamped => {
            let ky = if grid.ny == 0 { 1 } else { grid.ny };
            let mut cells = Vec::with_capacity(grid.nx * ky);
            for k in 0..ky {
                for i in 0..grid.nx {
                    cells.push(grid.plate_index(i, k));
                }
            }
            cells
        }
    }
}

/// Cell measure for the forward-difference quadrature.
pub(crate) fn cell_measure(grid: &Grid) -> f64 {
    grid.hx() * if grid.ny == 0 { 1.0 } else { grid.hy() }
}

/// Forward-difference gradient on the cells of [`forward_cells`].
pub(crate) fn forward_gradient(grid: &Grid, w: &[f64], cells: &[usize]) -> Vec<Vec<f64>> {
    (0..plate_axes(grid))
        .map(|axis| {
            let h = axis_h(grid, axis);
            cells
                .iter()
                .map(|&ip| {
                    let p = plate_shift(grid, ip, axis, 1).expect("forward cell has a neighbour");
                    (w[p] - w[ip]) / h
                })
                .collect()
        })
        .collect()
}

/// Adjoint of [`forward_gradient`]: returns −div of the cell flux, per node.
pub(crate) fn forward_gradient_adjoint(grid: &Grid, flux: &[Vec<f64>], cells: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; grid.plate_len()];
    for (axis, fl) in flux.iter().enumerate() {
        let h = axis_h(grid, axis);
        for (c, &ip) in cells.iter().enumerate() {
            let p = plate_shift(grid, ip, axis, 1).unwrap();
            out[p] += fl[c] / h;
            out[ip] -= fl[c] / h;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivative_of_linear_is_exact_on_clamped_plate() {
        let g = Grid::new(8, 4, 2.0, Topology::Clamped).unwrap();
        let w: Vec<f64> = (0..g.plate_len()).map(|i| 3.0 * g.x(i) - 1.0).collect();
        for d in plate_derivative(&g, &w, 0) {
            assert!((d - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_laplacian_of_sine() {
        let g = Grid::periodic(64, 4, 2.0 * PI).unwrap();
        let w: Vec<f64> = (0..g.plate_len()).map(|i| g.x(i).sin()).collect();
        let lap = laplacian(&g, &w);
        let h = g.hx();
        // exact symbol of the 3-point stencil
        let symbol = -(2.0 - 2.0 * h.cos()) / (h * h);
        for (i, l) in lap.iter().enumerate() {
            assert!((l - symbol * w[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn clamped_bilaplacian_boundary_row() {
        let g = Grid::new(8, 4, 8.0, Topology::Clamped).unwrap();
        let mut w = vec![0.0; g.plate_len()];
        w[1] = 1.0;
        let b = bilaplacian(&g, &w);
        assert!((b[1] - 7.0).abs() < 1e-12);
        assert!((b[2] + 4.0).abs() < 1e-12);
        assert!((b[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_adjoint_matches_inner_product() {
        let g = Grid::new(6, 4, 1.0, Topology::Clamped).unwrap();
        let cells = forward_cells(&g);
        let w: Vec<f64> = (0..g.plate_len()).map(|i| (i as f64 * 0.7).sin()).collect();
        let flux = vec![(0..cells.len()).map(|c| (c as f64).cos()).collect::<Vec<_>>()];
        let grad = forward_gradient(&g, &w, &cells);
        let lhs: f64 = grad[0].iter().zip(&flux[0]).map(|(a, b)| a * b).sum();
        let adj = forward_gradient_adjoint(&g, &flux, &cells);
        let rhs: f64 = adj.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
