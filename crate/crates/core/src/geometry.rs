//! The ALE map A_w(X, z) = (X, (z+1)·w(X) + z) and the transformed calculus it induces.

use crate::error::{Error, Result};
use crate::grid::{Grid, Mat, PlateField, ScalarField, TensorField, Topology, VectorField, IDENTITY};
use crate::stencil::{plate_gradient, plate_shift};

/// Maps a reference point to the physical domain.
pub fn ale_map(w: &PlateField, x: &[f64], z: f64) -> Result<Vec<f64>> {
    let g = w.grid();
    let wx = interpolate_plate(w, x);
    if 1.0 + wx <= 0.0 {
        return Err(Error::Collision {
            min_gap: 1.0 + wx,
            node: nearest_plate_node(g, x),
            threshold: 0.0,
        });
    }
    let mut p = x.to_vec();
    p.push((z + 1.0) * wx + z);
    Ok(p)
}

fn nearest_plate_node(g: &Grid, x: &[f64]) -> usize {
    let i = ((x[0] / g.hx()).round() as isize).rem_euclid(g.plate_nx() as isize) as usize;
    let k = if g.ny == 0 {
        0
    } else {
        ((x[1] / g.hy()).round() as isize).rem_euclid(g.plate_ny() as isize) as usize
    };
    g.plate_index(i, k)
}

/// Piecewise (bi)linear interpolation of a plate field at a plate point.
pub fn interpolate_plate(w: &PlateField, x: &[f64]) -> f64 {
    let g = w.grid();
    let v = w.values();
    let locate = |coord: f64, h: f64, n_nodes: usize, periodic: bool| -> (usize, usize, f64) {
        let s = coord / h;
        if periodic {
            let base = s.floor();
            let t = s - base;
            let i0 = (base as isize).rem_euclid(n_nodes as isize) as usize;
            (i0, (i0 + 1) % n_nodes, t)
        } else {
            let s = s.clamp(0.0, (n_nodes - 1) as f64);
            let i0 = (s.floor() as usize).min(n_nodes - 2);
            (i0, i0 + 1, s - i0 as f64)
        }
    };
    let periodic = g.topology == Topology::Periodic;
    let (i0, i1, tx) = locate(x[0], g.hx(), g.plate_nx(), periodic);
    if g.ny == 0 {
        return (1.0 - tx) * v[i0] + tx * v[i1];
    }
    let (k0, k1, ty) = locate(x.get(1).copied().unwrap_or(0.0), g.hy(), g.plate_ny(), periodic);
    let at = |i, k| v[g.plate_index(i, k)];
    (1.0 - ty) * ((1.0 - tx) * at(i0, k0) + tx * at(i1, k0)) + ty * ((1.0 - tx) * at(i0, k1) + tx * at(i1, k1))
}

/// Geometry of the ALE map at one instant.
#[derive(Debug, Clone)]
pub struct AleGeometry {
    pub w: PlateField,
    pub wt: PlateField,
    /// J = 1 + w, constant in z.
    pub jacobian: ScalarField,
    /// (∇A_w)^{−1} ∘ A_w per node.
    pub inv_grad: TensorField,
    /// 𝐰 = (z+1)·∂t w·e_d.
    pub ale_velocity: VectorField,
    /// Plate gradient of w, one vector per axis.
    pub grad_w: Vec<Vec<f64>>,
}

/// Smallest 1 + w and where it is attained.
pub fn min_gap(w: &PlateField) -> (f64, usize) {
    w.values()
        .iter()
        .enumerate()
        .map(|(i, v)| (1.0 + v, i))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

pub fn build_geometry(w: &PlateField, wt: &PlateField) -> Result<AleGeometry> {
    let g = *w.grid();
    g.ensure_same(wt.grid())?;
    let (gap, node) = min_gap(w);
    if gap <= 0.0 {
        return Err(Error::Collision {
            min_gap: gap,
            node,
            threshold: 0.0,
        });
    }
    let d = g.dim();
    let grad_w = plate_gradient(&g, w.values());
    let n = g.fluid_len();
    let mut jac = Vec::with_capacity(n);
    let mut inv = Vec::with_capacity(n);
    let mut vel = vec![vec![0.0; n]; d];
    for node in 0..n {
        let (ip, j) = g.node_split(node);
        let one_w = 1.0 + w.values()[ip];
        let zp1 = g.z(j) + 1.0;
        jac.push(one_w);
        let mut m: Mat = IDENTITY;
        for (a, gw) in grad_w.iter().enumerate() {
            m[d - 1][a] = -zp1 / one_w * gw[ip];
        }
        m[d - 1][d - 1] = 1.0 / one_w;
        inv.push(m);
        vel[d - 1][node] = zp1 * wt.values()[ip];
    }
    Ok(AleGeometry {
        w: w.clone(),
        wt: wt.clone(),
        jacobian: ScalarField::from_vec_unchecked(g, jac),
        inv_grad: TensorField::from_vec_unchecked(g, inv),
        ale_velocity: VectorField::from_vec_unchecked(g, vel),
        grad_w,
    })
}

impl AleGeometry {
    pub fn grid(&self) -> &Grid {
        self.w.grid()
    }

    /// Static geometry of a plate at rest with displacement `w`.
    pub fn at_rest(w: &PlateField) -> Result<Self> {
        build_geometry(w, &PlateField::zeros(*w.grid()))
    }
}

/// Reference derivative along fluid axis `axis` (0 = X, 1 = Y when d = 3, last = z).
///
/// Centered in the interior, one-sided second order at rigid walls, wrapping on periodic Γ.
pub fn reference_derivative(g: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let d = g.dim();
    let n = g.fluid_len();
    let mut out = vec![0.0; n];
    if axis == d - 1 {
        let hz = g.hz();
        let pl = g.plate_len();
        for node in 0..n {
            let (_, j) = g.node_split(node);
            out[node] = if j == 0 {
                (-3.0 * f[node] + 4.0 * f[node + pl] - f[node + 2 * pl]) / (2.0 * hz)
            } else if j == g.nz {
                (3.0 * f[node] - 4.0 * f[node - pl] + f[node - 2 * pl]) / (2.0 * hz)
            } else {
                (f[node + pl] - f[node - pl]) / (2.0 * hz)
            };
        }
    } else {
        let h = if axis == 0 { g.hx() } else { g.hy() };
        for node in 0..n {
            let (ip, j) = g.node_split(node);
            let at = |q: usize| f[g.node(q, j)];
            out[node] = match (plate_shift(g, ip, axis, -1), plate_shift(g, ip, axis, 1)) {
                (Some(m), Some(p)) => (at(p) - at(m)) / (2.0 * h),
                (None, Some(p)) => {
                    let p2 = plate_shift(g, ip, axis, 2).unwrap();
                    (-3.0 * f[node] + 4.0 * at(p) - at(p2)) / (2.0 * h)
                }
                (Some(m), None) => {
                    let m2 = plate_shift(g, ip, axis, -2).unwrap();
                    (3.0 * f[node] - 4.0 * at(m) + at(m2)) / (2.0 * h)
                }
                (None, None) => unreachable!(),
            };
        }
    }
    out
}

fn check_grid(f: &Grid, geo: &AleGeometry) -> Result<()> {
    f.ensure_same(geo.grid())
}

/// ∇^w f = ∇f · inv_grad for a scalar field.
pub fn transformed_gradient(f: &ScalarField, geo: &AleGeometry) -> Result<VectorField> {
    check_grid(f.grid(), geo)?;
    let g = *f.grid();
    let d = g.dim();
    let refs: Vec<Vec<f64>> = (0..d).map(|k| reference_derivative(&g, f.values(), k)).collect();
    let mut out = vec![vec![0.0; g.fluid_len()]; d];
    for node in 0..g.fluid_len() {
        let m = geo.inv_grad.at(node);
        for b in 0..d {
            let mut s = 0.0;
            for (k, rk) in refs.iter().enumerate() {
                s += rk[node] * m[k][b];
            }
            out[b][node] = s;
        }
    }
    Ok(VectorField::from_vec_unchecked(g, out))
}

/// ∇^w U with rows indexed by component and columns by direction.
pub fn transformed_gradient_vector(u: &VectorField, geo: &AleGeometry) -> Result<TensorField> {
    check_grid(u.grid(), geo)?;
    let g = *u.grid();
    let d = g.dim();
    let refs: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|a| (0..d).map(|k| reference_derivative(&g, u.comp(a), k)).collect())
        .collect();
    let mut out = vec![[[0.0; 3]; 3]; g.fluid_len()];
    for (node, o) in out.iter_mut().enumerate() {
        let m = geo.inv_grad.at(node);
        for a in 0..d {
            for b in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += refs[a][k][node] * m[k][b];
                }
                o[a][b] = s;
            }
        }
    }
    Ok(TensorField::from_vec_unchecked(g, out))
}

/// ∇^w · F = Tr(∇^w F).
pub fn transformed_divergence(f: &VectorField, geo: &AleGeometry) -> Result<ScalarField> {
    let t = transformed_gradient_vector(f, geo)?;
    let d = f.dim();
    let vals = t
        .values()
        .iter()
        .map(|m| (0..d).map(|a| m[a][a]).sum())
        .collect();
    Ok(ScalarField::from_vec_unchecked(*f.grid(), vals))
}

/// Pull-back of the extension R_w f = f·(z+1)/(w+1)·e_d.
///
/// At the reference node (X, z) the physical height is (z+1)(1+w) − 1, so the
/// factor (z_phys+1)/(w+1) reduces to z+1.
pub fn extension_operator(f: &PlateField, geo: &AleGeometry) -> Result<VectorField> {
    let g = *geo.grid();
    g.ensure_same(f.grid())?;
    let (gap, node) = min_gap(&geo.w);
    if gap <= 0.0 {
        return Err(Error::Collision {
            min_gap: gap,
            node,
            threshold: 0.0,
        });
    }
    let d = g.dim();
    let mut comps = vec![vec![0.0; g.fluid_len()]; d];
    for n in 0..g.fluid_len() {
        let (ip, j) = g.node_split(n);
        let one_w = 1.0 + geo.w.values()[ip];
        let z_phys = (g.z(j) + 1.0) * one_w - 1.0;
        comps[d - 1][n] = f.values()[ip] * (z_phys + 1.0) / one_w;
    }
    Ok(VectorField::from_vec_unchecked(g, comps))
}

/// S^w = √(1 + |∇w|²).
pub fn surface_jacobian(w: &PlateField) -> PlateField {
    let g = *w.grid();
    let grad = plate_gradient(&g, w.values());
    let vals = (0..g.plate_len())
        .map(|ip| (1.0 + grad.iter().map(|c| c[ip] * c[ip]).sum::<f64>()).sqrt())
        .collect();
    PlateField::from_vec_unchecked(g, vals)
}

/// Outward unit normal (−∇w, 1)/S^w on the graph, one vector per plate node.
pub fn graph_normal(w: &PlateField) -> Vec<Vec<f64>> {
    let g = *w.grid();
    let grad = plate_gradient(&g, w.values());
    let s = surface_jacobian(w);
    (0..g.plate_len())
        .map(|ip| {
            let inv = 1.0 / s.values()[ip];
            let mut nu: Vec<f64> = grad.iter().map(|c| -c[ip] * inv).collect();
            nu.push(inv);
            nu
        })
        .collect()
}

/// Residual of d/dt(q∘A) = (∂t q)∘A + 𝐰·∇^w(q∘A) at every interior snapshot.
///
/// `pulled_back[n]` holds q(t_n)∘A(t_n), `partial_t[n]` holds (∂t q)(t_n)∘A(t_n).
pub fn material_derivative_identity_residual(
    pulled_back: &[ScalarField],
    partial_t: &[ScalarField],
    geos: &[AleGeometry],
    dt: f64,
) -> Result<Vec<ScalarField>> {
    let n = pulled_back.len();
    if n < 3 {
        return Err(Error::TooFewSnapshots { needed: 3, got: n });
    }
    if partial_t.len() != n || geos.len() != n {
        return Err(Error::GridMismatch("snapshot series have different lengths".into()));
    }
    let mut out = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let geo = &geos[k];
        let grad = transformed_gradient(&pulled_back[k], geo)?;
        let g = *geo.grid();
        let d = g.dim();
        let vals = (0..g.fluid_len())
            .map(|node| {
                let ddt = (pulled_back[k + 1].values()[node] - pulled_back[k - 1].values()[node]) / (2.0 * dt);
                let adv: f64 = (0..d).map(|c| geo.ale_velocity.comp(c)[node] * grad.comp(c)[node]).sum();
                ddt - partial_t[k].values()[node] - adv
            })
            .collect();
        out.push(ScalarField::from_vec_unchecked(g, vals));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::periodic(16, 8, 2.0).unwrap()
    }

    #[test]
    fn ale_map_examples() {
        let g = grid();
        let w0 = PlateField::zeros(g);
        assert_eq!(ale_map(&w0, &[0.3], -0.5).unwrap(), vec![0.3, -0.5]);
        let w5 = PlateField::constant(g, 0.5);
        assert_eq!(ale_map(&w5, &[0.3], 0.0).unwrap(), vec![0.3, 0.5]);
        assert_eq!(ale_map(&w5, &[0.3], -1.0).unwrap(), vec![0.3, -1.0]);
        let wc = PlateField::constant(g, -1.0);
        assert!(matches!(ale_map(&wc, &[0.3], -0.5), Err(Error::Collision { .. })));
    }

    #[test]
    fn geometry_of_constant_displacement() {
        let g = grid();
        let geo = build_geometry(&PlateField::constant(g, 0.5), &PlateField::zeros(g)).unwrap();
        for node in 0..g.fluid_len() {
            assert_eq!(geo.jacobian.values()[node], 1.5);
            let m = geo.inv_grad.at(node);
            assert_eq!(m[0][0], 1.0);
            assert_eq!(m[0][1], 0.0);
            assert_eq!(m[1][0], 0.0);
            assert_eq!(m[1][1], 1.0 / 1.5);
        }
    }

    #[test]
    fn ale_velocity_at_top_equals_wt() {
        let g = grid();
        let w = PlateField::from_fn(g, |x, _| 0.1 * (std::f64::consts::PI * x).sin());
        let geo = build_geometry(&w, &PlateField::constant(g, 1.0)).unwrap();
        for ip in 0..g.plate_len() {
            assert_eq!(geo.ale_velocity.comp(1)[g.node(ip, g.nz)], 1.0);
            assert_eq!(geo.ale_velocity.comp(0)[g.node(ip, g.nz)], 0.0);
        }
    }

    #[test]
    fn gradient_examples() {
        let g = grid();
        let c = 0.3;
        let geo = build_geometry(&PlateField::constant(g, c), &PlateField::zeros(g)).unwrap();
        let f = ScalarField::from_fn(g, |_, _, z| z);
        let gr = transformed_gradient(&f, &geo).unwrap();
        for n in 0..g.fluid_len() {
            assert!(gr.comp(0)[n].abs() < 1e-14);
            assert!((gr.comp(1)[n] - 1.0 / (1.0 + c)).abs() < 1e-13);
        }
        let gc = Grid::new(16, 8, 2.0, Topology::Clamped).unwrap();
        let w = PlateField::from_fn(gc, |x, _| 0.2 * x * (2.0 - x));
        let geo = AleGeometry::at_rest(&w).unwrap();
        let fx = ScalarField::from_fn(gc, |x, _, _| x);
        let gr = transformed_gradient(&fx, &geo).unwrap();
        for n in 0..gc.fluid_len() {
            assert!((gr.comp(0)[n] - 1.0).abs() < 1e-12);
            assert!(gr.comp(1)[n].abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_examples() {
        let g = Grid::new(16, 8, 2.0, Topology::Clamped).unwrap();
        let geo = AleGeometry::at_rest(&PlateField::zeros(g)).unwrap();
        let f = VectorField::from_fn(g, |x, _, z| [x, z, 0.0]);
        let div = transformed_divergence(&f, &geo).unwrap();
        assert!(div.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
        let c = VectorField::from_fn(g, |_, _, _| [0.4, -1.2, 0.0]);
        let div = transformed_divergence(&c, &geo).unwrap();
        assert!(div.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn extension_examples() {
        let g = grid();
        let one = PlateField::constant(g, 1.0);
        let geo0 = AleGeometry::at_rest(&PlateField::zeros(g)).unwrap();
        let e = extension_operator(&one, &geo0).unwrap();
        let j_half = g.nz / 2;
        assert!((g.z(j_half) + 0.5).abs() < 1e-15);
        assert!((e.comp(1)[g.node(0, j_half)] - 0.5).abs() < 1e-15);
        assert_eq!(e.comp(0)[g.node(0, j_half)], 0.0);

        let geo1 = AleGeometry::at_rest(&one).unwrap();
        let e = extension_operator(&one, &geo1).unwrap();
        assert!((e.comp(1)[g.node(3, g.nz)] - 1.0).abs() < 1e-15);

        let two = PlateField::constant(g, 2.0);
        let div = transformed_divergence(&extension_operator(&two, &geo1).unwrap(), &geo1).unwrap();
        assert!(div.values().iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn surface_jacobian_and_normal() {
        let g = Grid::new(8, 4, 1.0, Topology::Clamped).unwrap();
        let flat = PlateField::zeros(g);
        assert!(surface_jacobian(&flat).values().iter().all(|&s| s == 1.0));
        assert_eq!(graph_normal(&flat)[3], vec![-0.0, 1.0]);
        let ramp = PlateField::from_fn(g, |x, _| x);
        let s = surface_jacobian(&ramp);
        let nu = graph_normal(&ramp);
        let r2 = std::f64::consts::SQRT_2;
        assert!((s.values()[4] - r2).abs() < 1e-14);
        assert!((nu[4][0] + 1.0 / r2).abs() < 1e-14);
        assert!((nu[4][1] - 1.0 / r2).abs() < 1e-14);
    }

    #[test]
    fn material_derivative_static_and_constant() {
        let g = grid();
        let geo = AleGeometry::at_rest(&PlateField::zeros(g)).unwrap();
        let dt = 0.1;
        let q: Vec<ScalarField> = (0..4).map(|n| ScalarField::constant(g, n as f64 * dt)).collect();
        let qt = vec![ScalarField::constant(g, 1.0); 4];
        let res = material_derivative_identity_residual(&q, &qt, &vec![geo.clone(); 4], dt).unwrap();
        assert_eq!(res.len(), 2);
        assert!(res.iter().all(|r| r.max_abs() < 1e-13));
        let c = vec![ScalarField::constant(g, 3.0); 3];
        let zero = vec![ScalarField::zeros(g); 3];
        let res = material_derivative_identity_residual(&c, &zero, &vec![geo; 3], dt).unwrap();
        assert!(res[0].max_abs() == 0.0);
        assert!(matches!(
            material_derivative_identity_residual(&c[..2], &zero[..2], &[], dt),
            Err(Error::TooFewSnapshots { .. })
        ));
    }
}
