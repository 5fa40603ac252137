//! Fourier tools on periodic plates: Sobolev norms of any real order and
//! trigonometric interpolation between resolutions.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid, PlateField, Topology};

fn fft_axis(data: &mut [Complex64], nx: usize, ny: usize, axis: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let len = if axis == 0 { nx } else { ny };
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    if axis == 0 {
        for row in data.chunks_mut(nx) {
            fft.process(row);
        }
    } else {
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for i in 0..nx {
            for k in 0..ny {
                col[k] = data[k * nx + i];
            }
            fft.process(&mut col);
            for k in 0..ny {
                data[k * nx + i] = col[k];
            }
        }
    }
}

/// Normalized Fourier coefficients f̂ with f_j = Σ f̂_k e^{i k·x_j}.
pub fn fourier_coefficients(f: &PlateField) -> Result<Vec<Complex64>> {
    let g = f.grid();
    if g.topology != Topology::Periodic {
        return Err(Error::NotPeriodic);
    }
    let (nx, ny) = (g.plate_nx(), g.plate_ny());
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_axis(&mut data, nx, ny, 0, false);
    if ny > 1 {
        fft_axis(&mut data, nx, ny, 1, false);
    }
    let scale = 1.0 / (nx * ny) as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    Ok(data)
}

fn signed_mode(m: usize, n: usize) -> f64 {
    if m <= n / 2 {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

/// Squared wavenumber |k|² of each Fourier coefficient.
pub fn wavenumbers_squared(g: &Grid) -> Vec<f64> {
    let (nx, ny) = (g.plate_nx(), g.plate_ny());
    let kx = 2.0 * PI / g.lx;
    let ky = if g.ny == 0 { 0.0 } else { 2.0 * PI / g.ly };
    let mut out = Vec::with_capacity(nx * ny);
    for k in 0..ny {
        for i in 0..nx {
            let a = kx * signed_mode(i, nx);
            let b = ky * signed_mode(k, ny);
            out.push(a * a + b * b);
        }
    }
    out
}

/// ‖f‖_{H^s} = (|Γ| Σ (1+|k|²)^s |f̂_k|²)^{1/2} for any real s.
pub fn sobolev_norm(f: &PlateField, s: f64) -> Result<f64> {
    let coeffs = fourier_coefficients(f)?;
    let k2 = wavenumbers_squared(f.grid());
    let sum: f64 = coeffs
        .iter()
        .zip(&k2)
        .map(|(c, &k)| (1.0 + k).powf(s) * c.norm_sqr())
        .sum();
    Ok((f.grid().plate_measure() * sum).sqrt())
}

/// Spectral zero-padding of a periodic plate field onto a finer grid over the same domain.
pub fn trig_interpolate(f: &PlateField, target: &Grid) -> Result<PlateField> {
    let g = f.grid();
    if g.topology != Topology::Periodic || target.topology != Topology::Periodic {
        return Err(Error::NotPeriodic);
    }
    let (nx, ny) = (g.plate_nx(), g.plate_ny());
    let (mx, my) = (target.plate_nx(), target.plate_ny());
    if mx < nx || my < ny || (g.ny == 0) != (target.ny == 0) {
        return Err(Error::GridMismatch("interpolation target must be at least as fine".into()));
    }
    let coeffs = fourier_coefficients(f)?;
    let map_mode = |m: usize, n: usize, big: usize| -> Vec<(usize, f64)> {
        // Nyquist modes of an even grid are split between ±n/2
        if n.is_multiple_of(2) && m == n / 2 && big > n {
            vec![(n / 2, 0.5), (big - n / 2, 0.5)]
        } else if m <= n / 2 {
            vec![(m, 1.0)]
        } else {
            vec![(big - (n - m), 1.0)]
        }
    };
    let mut data = vec![Complex64::new(0.0, 0.0); mx * my];
    for k in 0..ny {
        for i in 0..nx {
            let c = coeffs[k * nx + i];
            for (ti, wi) in map_mode(i, nx, mx) {
                for (tk, wk) in map_mode(k, ny, my) {
                    data[tk * mx + ti] += c * (wi * wk);
                }
            }
        }
    }
    fft_axis(&mut data, mx, my, 0, true);
    if my > 1 {
        fft_axis(&mut data, mx, my, 1, true);
    }
    PlateField::new(*target, data.iter().map(|c| c.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_norms() {
        let g = Grid::periodic(32, 4, 2.0 * PI).unwrap();
        let f = PlateField::from_fn(g, |x, _| x.sin());
        // ‖sin‖²_{L²(0,2π)} = π, and |k| = 1 gives weight 2^s
        for s in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let n = sobolev_norm(&f, s).unwrap();
            assert!((n * n - PI * 2f64.powf(s)).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn interpolation_is_exact_for_band_limited_fields() {
        let g = Grid::periodic(16, 4, 2.0).unwrap();
        let fine = Grid::periodic(64, 4, 2.0).unwrap();
        let f = |x: f64| (PI * x).sin() + 0.3 * (3.0 * PI * x).cos() + 0.1;
        let coarse = PlateField::from_fn(g, |x, _| f(x));
        let up = trig_interpolate(&coarse, &fine).unwrap();
        for (i, v) in up.values().iter().enumerate() {
            assert!((v - f(fine.x(i))).abs() < 1e-12);
        }
    }
}
