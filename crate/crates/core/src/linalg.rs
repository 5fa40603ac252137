//! Small linear-algebra kernels: CSR matrices, projected preconditioned CG and a
//! banded Cholesky factorization.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Assembles from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_unstable_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Sparsity pattern with zero values; returns the value slot of every entry.
    pub fn pattern(nrows: usize, ncols: usize, entries: &[(usize, usize)]) -> (Self, Vec<usize>) {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_unstable_by_key(|&e| entries[e]);
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::new();
        let mut slots = vec![0usize; entries.len()];
        let mut last: Option<(usize, usize)> = None;
        for e in order {
            let (r, c) = entries[e];
            if last != Some((r, c)) {
                cols.push(c);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
            slots[e] = cols.len() - 1;
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let nnz = cols.len();
        (
            Csr {
                nrows,
                ncols,
                row_ptr,
                cols,
                vals: vec![0.0; nnz],
            },
            slots,
        )
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.nrows {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            y[r] = s;
        }
    }

    /// y += Aᵀ x.
    pub fn mul_transpose_add(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.nrows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.cols[p]] += self.vals[p] * xr;
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (r, dr) in d.iter_mut().enumerate() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[p] == r {
                    *dr += self.vals[p];
                }
            }
        }
        d
    }

    /// Σ_r w_r A_{rc}² for each column c.
    pub fn weighted_column_squares(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.cols[p]] += w[r] * self.vals[p] * self.vals[p];
            }
        }
        out
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (self.cols[p], self.vals[p]))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned CG on the range of an orthogonal projector.
///
/// `apply` must be symmetric positive definite on that range, `project` must be
/// an orthogonal projection, and `b` should already lie in the range.
pub fn projected_pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    project: impl Fn(&mut [f64]),
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgStats> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    project(x);
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    project(&mut r);
    let b_norm = {
        let mut bb = b.to_vec();
        project(&mut bb);
        norm2(&bb)
    };
    if b_norm == 0.0 && norm2(&r) == 0.0 {
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let precondition = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        project(z);
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm2(&r) / scale;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(CgStats {
                iterations: it,
                relative_residual: res,
            });
        }
        apply(&p, &mut ap);
        project(&mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(Error::Divergence(format!(
                "CG breakdown at iteration {it}: pᵀAp = {pap:e}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm2(&r) / scale;
        if !res.is_finite() {
            return Err(Error::Divergence("non-finite CG residual".into()));
        }
    }
    if res <= tol {
        return Ok(CgStats {
            iterations: max_iter,
            relative_residual: res,
        });
    }
    Err(Error::Divergence(format!(
        "CG did not converge in {max_iter} iterations (relative residual {res:e})"
    )))
}

/// Symmetric positive definite banded matrix stored by lower diagonals,
/// factorized in place as L Lᵀ.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // band[i][k] = L[i][i - bw + k], k = 0..=bw
    band: Vec<Vec<f64>>,
}

impl BandedCholesky {
    /// Factorizes the SPD matrix whose entries are given by `entry(i, j)` for |i − j| ≤ bw.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut band = vec![vec![0.0; bw + 1]; n];
        for (i, row) in band.iter_mut().enumerate() {
            for k in 0..=bw {
                if i + k >= bw {
                    let j = i + k - bw;
                    row[k] = entry(i, j);
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = band[i][j + bw - i];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= band[i][k + bw - i] * band[j][k + bw - j];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::SolverBreakdown(format!(
                            "non-positive pivot {s:e} at row {i}"
                        )));
                    }
                    band[i][bw] = s.sqrt();
                } else {
                    band[i][j + bw - i] = s / band[j][bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, band })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let mut y = b.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let mut s = y[i];
            for j in j0..i {
                s -= self.band[i][j + bw - i] * y[j];
            }
            y[i] = s / self.band[i][bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n.min(i + bw + 1) {
                s -= self.band[j][i + bw - j] * y[j];
            }
            y[i] = s / self.band[i][bw];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_sums_duplicates_and_transposes() {
        let a = Csr::from_triplets(2, 3, vec![(0, 1, 1.0), (1, 2, 2.0), (0, 1, 0.5), (1, 0, -1.0)]);
        let mut y = vec![0.0; 2];
        a.mul_vec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![3.0, 5.0]);
        let mut z = vec![0.0; 3];
        a.mul_transpose_add(&[1.0, 1.0], &mut z);
        assert_eq!(z, vec![-1.0, 1.5, 2.0]);
    }

    #[test]
    fn pattern_slots_accumulate() {
        let entries = [(1, 1), (0, 2), (1, 1), (0, 0)];
        let (mut a, slots) = Csr::pattern(2, 3, &entries);
        for (e, v) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
            a.values_mut()[slots[e]] += v;
        }
        let mut y = vec![0.0; 2];
        a.mul_vec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![6.0, 4.0]);
        assert_eq!(a.diagonal(), vec![4.0, 4.0]);
    }

    #[test]
    fn banded_cholesky_solves_pentadiagonal() {
        let n = 12;
        let entry = |i: usize, j: usize| match i.abs_diff(j) {
            0 => 6.0,
            1 => -4.0,
            2 => 1.0,
            _ => 0.0,
        } + if i == j { 0.5 } else { 0.0 };
        let f = BandedCholesky::factor(n, 2, entry).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| entry(i, j) * x_true[j]).sum())
            .collect();
        let x = f.solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_with_mean_projection() {
        // periodic 1D Laplacian (singular on constants) plus projection onto zero mean
        let n = 16;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 2.0 * x[i] - x[(i + 1) % n] - x[(i + n - 1) % n];
            }
        };
        let project = |x: &mut [f64]| {
            let m = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|v| *v -= m);
        };
        let x_true: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
        let mut b = vec![0.0; n];
        apply(&x_true, &mut b);
        let mut x = vec![0.0; n];
        let stats = projected_pcg(apply, project, &vec![0.5; n], &b, &mut x, 1e-13, 200).unwrap();
        assert!(stats.relative_residual <= 1e-13);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
