//! Node-centred finite volumes on the fixed rectangle.
//!
//! Control volumes sit on the nodes, with half cells on the top and bottom rows.
//! Face fluxes are Piola fluxes of J·M·U, the viscous form is a four-corner
//! quadrature per cell, and the mass balance upwinds the density.
//! Only a periodic plate with a 2D fluid is supported.

use crate::error::{Error, Result};
use crate::fluid::FluidParams;
use crate::geometry::AleGeometry;
use crate::grid::{Grid, Topology};
use crate::linalg::Csr;
use crate::stencil::plate_derivative;

#[derive(Debug, Clone)]
pub(crate) struct Face {
    /// Flux is outward from `a`.
    pub a: usize,
    /// Neighbour across the face, `None` on the walls.
    pub b: Option<usize>,
    pub dofs: [usize; 4],
    pub coef: [f64; 4],
    pub len: usize,
    pub mesh_node: usize,
    /// Mesh flux is `mesh_factor · ∂t w[mesh_node]`.
    pub mesh_factor: f64,
    kind: FaceKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FaceKind {
    X { j: usize, i0: usize, i1: usize },
    Z { i: usize, zf: f64 },
    Top,
    Bottom,
}

#[derive(Debug, Clone)]
pub(crate) struct FluidOperators {
    grid: Grid,
    n: usize,
    /// Reference volume of each node, hx·hz·ω_j.
    weight: Vec<f64>,
    /// 1 + w per plate node.
    jac: Vec<f64>,
    faces: Vec<Face>,
    b: Csr,
    b_slots: Vec<[usize; 8]>,
    a: Csr,
    a_slots: Vec<[usize; 64]>,
    mu: f64,
    mu_lambda: f64,
}

pub(crate) fn check_supported(g: &Grid) -> Result<()> {
    if g.ny != 0 {
        return Err(Error::Unsupported("the fluid solver runs with a 2D fluid only".into()));
    }
    if g.topology != Topology::Periodic {
        return Err(Error::Unsupported("the fluid solver needs a periodic plate".into()));
    }
    Ok(())
}

impl FluidOperators {
    pub fn new(grid: &Grid, params: &FluidParams) -> Result<Self> {
        check_supported(grid)?;
        let g = *grid;
        let n = g.fluid_len();
        let nx = g.plate_nx();
        let weight = (0..n).map(|node| g.fluid_weight(node)).collect();
        let mut faces = Vec::new();
        let blank = |a, b, kind| Face {
            a,
            b,
            dofs: [0; 4],
            coef: [0.0; 4],
            len: 0,
            mesh_node: 0,
            mesh_factor: 0.0,
            kind,
        };
        for j in 0..=g.nz {
            for i in 0..nx {
                let a = g.node(i, j);
                let i1 = (i + 1) % nx;
                let b = g.node(i1, j);
                let mut f = blank(a, Some(b), FaceKind::X { j, i0: i, i1 });
                f.dofs[..2].copy_from_slice(&[a, b]);
                f.len = 2;
                faces.push(f);
            }
        }
        for j in 0..g.nz {
            for i in 0..nx {
                let a = g.node(i, j);
                let b = g.node(i, j + 1);
                let zf = g.z(j) + 0.5 * g.hz();
                let mut f = blank(a, Some(b), FaceKind::Z { i, zf });
                f.dofs = [n + a, n + b, a, b];
                f.len = 4;
                f.mesh_node = i;
                f.mesh_factor = g.hx() * (zf + 1.0);
                faces.push(f);
            }
        }
        for i in 0..nx {
            let a = g.node(i, g.nz);
            let mut f = blank(a, None, FaceKind::Top);
            f.dofs[0] = n + a;
            f.len = 1;
            f.mesh_node = i;
            f.mesh_factor = g.hx();
            faces.push(f);
            let a = g.node(i, 0);
            let mut f = blank(a, None, FaceKind::Bottom);
            f.dofs[0] = n + a;
            f.len = 1;
            faces.push(f);
        }
        let mut entries = Vec::new();
        for f in &faces {
            for k in 0..f.len {
                entries.push((f.a, f.dofs[k]));
                if let Some(b) = f.b {
                    entries.push((b, f.dofs[k]));
                }
            }
        }
        let (b, flat) = Csr::pattern(n, 2 * n, &entries);
        let mut b_slots = Vec::with_capacity(faces.len());
        let mut cursor = 0;
        for f in &faces {
            let mut s = [usize::MAX; 8];
            for k in 0..f.len {
                s[2 * k] = flat[cursor];
                cursor += 1;
                if f.b.is_some() {
                    s[2 * k + 1] = flat[cursor];
                    cursor += 1;
                }
            }
            b_slots.push(s);
        }
        let mut entries = Vec::with_capacity(64 * nx * g.nz);
        for j in 0..g.nz {
            for i in 0..nx {
                let dofs = cell_dofs(&g, i, j);
                for &r in &dofs {
                    for &c in &dofs {
                        entries.push((r, c));
                    }
                }
            }
        }
        let (a, flat) = Csr::pattern(2 * n, 2 * n, &entries);
        let a_slots = flat
            .chunks(64)
            .map(|c| {
                let mut s = [0usize; 64];
                s.copy_from_slice(c);
                s
            })
            .collect();
        let mut ops = FluidOperators {
            grid: g,
            n,
            weight,
            jac: vec![1.0; nx],
            faces,
            b,
            b_slots,
            a,
            a_slots,
            mu: params.mu,
            mu_lambda: params.mu + params.lambda,
        };
        ops.update(&vec![0.0; nx]);
        Ok(ops)
    }

    /// Operators frozen at the geometry `geo`.
    pub fn assembled(geo: &AleGeometry, params: &FluidParams) -> Result<Self> {
        let mut ops = Self::new(geo.grid(), params)?;
        ops.update(geo.w.values());
        Ok(ops)
    }

    /// Refills fluxes and the viscous matrix for the plate displacement `w`.
    pub fn update(&mut self, w: &[f64]) {
        let g = self.grid;
        let (hx, hz) = (g.hx(), g.hz());
        let wx = plate_derivative(&g, w, 0);
        for (ji, wi) in self.jac.iter_mut().zip(w) {
            *ji = 1.0 + wi;
        }
        for f in self.faces.iter_mut() {
            match f.kind {
                FaceKind::X { j, i0, i1 } => {
                    let c = 0.5 * g.z_weight(j) * (1.0 + 0.5 * (w[i0] + w[i1]));
                    f.coef[0] = c;
                    f.coef[1] = c;
                }
                FaceKind::Z { i, zf } => {
                    let c = -0.5 * hx * (zf + 1.0) * wx[i];
                    f.coef = [0.5 * hx, 0.5 * hx, c, c];
                }
                FaceKind::Top => f.coef[0] = hx,
                FaceKind::Bottom => f.coef[0] = -hx,
            }
        }
        let bv = self.b.values_mut();
        bv.iter_mut().for_each(|v| *v = 0.0);
        for (f, s) in self.faces.iter().zip(&self.b_slots) {
            for k in 0..f.len {
                bv[s[2 * k]] += f.coef[k];
                if f.b.is_some() {
                    bv[s[2 * k + 1]] -= f.coef[k];
                }
            }
        }

        let nx = g.plate_nx();
        let (mu, ml) = (self.mu, self.mu_lambda);
        let av = self.a.values_mut();
        av.iter_mut().for_each(|v| *v = 0.0);
        let mut cell = 0;
        for j in 0..g.nz {
            for i in 0..nx {
                let ip = [i, (i + 1) % nx];
                let wxc = (w[ip[1]] - w[ip[0]]) / hx;
                let mut local = [0.0f64; 64];
                for cj in 0..2 {
                    for ci in 0..2 {
                        let jac = 1.0 + w[ip[ci]];
                        let zc = g.z(j + cj);
                        let mut dx = [0.0; 4];
                        let mut dz = [0.0; 4];
                        dx[2 * cj] = -1.0 / hx;
                        dx[1 + 2 * cj] = 1.0 / hx;
                        dz[ci] = -1.0 / hz;
                        dz[ci + 2] = 1.0 / hz;
                        let shear = -(zc + 1.0) * wxc / jac;
                        let mut t = [[0.0; 4]; 2];
                        for k in 0..4 {
                            t[0][k] = dx[k] + shear * dz[k];
                            t[1][k] = dz[k] / jac;
                        }
                        let om = 0.25 * hx * hz * jac;
                        for c in 0..2 {
                            for k in 0..4 {
                                for c2 in 0..2 {
                                    for k2 in 0..4 {
                                        let mut v = ml * t[c][k] * t[c2][k2];
                                        if c == c2 {
                                            v += mu * (t[0][k] * t[0][k2] + t[1][k] * t[1][k2]);
                                        }
                                        local[(4 * c + k) * 8 + 4 * c2 + k2] += om * v;
                                    }
                                }
                            }
                        }
                    }
                }
                for (s, v) in self.a_slots[cell].iter().zip(local.iter()) {
                    av[*s] += v;
                }
                cell += 1;
            }
        }
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Divergence matrix: (B U)_i is the net outward volume flux of node i.
    pub fn b(&self) -> &Csr {
        &self.b
    }

    /// Viscous matrix: Uᵀ A U = ∫ J S(∇^w U) : ∇^w U.
    pub fn a(&self) -> &Csr {
        &self.a
    }

    /// Physical volume of each node for the plate displacement `w`.
    pub fn volumes(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|node| self.weight[node] * (1.0 + w[self.grid.node_split(node).0]))
            .collect()
    }

    /// Physical volumes for the geometry of the last [`update`](Self::update).
    pub fn current_volumes(&self) -> Vec<f64> {
        (0..self.n)
            .map(|node| self.weight[node] * self.jac[self.grid.node_split(node).0])
            .collect()
    }

    pub fn face_flux(&self, f: &Face, u: &[f64]) -> f64 {
        (0..f.len).map(|k| f.coef[k] * u[f.dofs[k]]).sum()
    }

    /// Φ − mesh flux on every face.
    pub fn relative_fluxes(&self, u: &[f64], wt: &[f64]) -> Vec<f64> {
        self.faces
            .iter()
            .map(|f| self.face_flux(f, u) - f.mesh_factor * wt[f.mesh_node])
            .collect()
    }

    /// Upwinded mass fluxes r_up·(Φ − mesh).
    pub fn mass_fluxes(&self, r: &[f64], u: &[f64], wt: &[f64]) -> Vec<f64> {
        self.faces
            .iter()
            .zip(self.relative_fluxes(u, wt))
            .map(|(f, fl)| {
                let up = match f.b {
                    Some(b) if fl < 0.0 => r[b],
                    _ => r[f.a],
                };
                up * fl
            })
            .collect()
    }

    /// Net outward sum of face values per node.
    pub fn net_outflow(&self, face_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (f, v) in self.faces.iter().zip(face_values) {
            out[f.a] += v;
            if let Some(b) = f.b {
                out[b] -= v;
            }
        }
        out
    }

    /// Upwind transport of velocity by the mass fluxes: Σ_{inflow} M(U_nb − U_i).
    pub fn convection(&self, u: &[f64], mass_flux: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; 2 * n];
        for (f, &m) in self.faces.iter().zip(mass_flux) {
            let Some(b) = f.b else { continue };
            // inflow into a when m < 0, into b when m > 0
            let (to, from, flux) = if m < 0.0 { (f.a, b, m) } else { (b, f.a, -m) };
            if flux == 0.0 {
                continue;
            }
            for c in 0..2 {
                out[c * n + to] += flux * (u[c * n + from] - u[c * n + to]);
            }
        }
        out
    }

    /// Σ_inflow |M| per node, for the transport time-step limit.
    pub fn inflow(&self, mass_flux: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (f, &m) in self.faces.iter().zip(mass_flux) {
            if let Some(b) = f.b {
                if m < 0.0 {
                    out[f.a] -= m;
                } else {
                    out[b] += m;
                }
            }
        }
        out
    }

    /// ∂t r = (−Σ r_up(Φ − mesh) − r·W·∂t w) / (W J).
    pub fn continuity_rate(&self, r: &[f64], u: &[f64], wt: &[f64]) -> Vec<f64> {
        let div = self.net_outflow(&self.mass_fluxes(r, u, wt));
        (0..self.n)
            .map(|node| {
                let ip = self.grid.node_split(node).0;
                let wgt = self.weight[node];
                (-div[node] - r[node] * wgt * wt[ip]) / (wgt * self.jac[ip])
            })
            .collect()
    }

    /// ∂t U = (Bᵀp − A U − convection) / (W J r); zero on the wall rows,
    /// which are prescribed by the boundary conditions.
    pub fn momentum_rate(&self, r: &[f64], u: &[f64], wt: &[f64], params: &FluidParams) -> Vec<f64> {
        let n = self.n;
        let p: Vec<f64> = r.iter().map(|v| v.powf(params.gamma)).collect();
        let mut force = vec![0.0; 2 * n];
        self.b.mul_transpose_add(&p, &mut force);
        let mut au = vec![0.0; 2 * n];
        self.a.mul_vec(u, &mut au);
        let conv = self.convection(u, &self.mass_fluxes(r, u, wt));
        let vol = self.current_volumes();
        let mut out = vec![0.0; 2 * n];
        for node in 0..n {
            let j = self.grid.node_split(node).1;
            if j == 0 || j == self.grid.nz {
                continue;
            }
            let m = vol[node] * r[node];
            for c in 0..2 {
                let k = c * n + node;
                out[k] = (force[k] - au[k] - conv[k]) / m;
            }
        }
        out
    }

    /// Uᵀ A U.
    pub fn viscous_energy(&self, u: &[f64]) -> f64 {
        let mut au = vec![0.0; u.len()];
        self.a.mul_vec(u, &mut au);
        crate::linalg::dot(u, &au)
    }
}

fn cell_dofs(g: &Grid, i: usize, j: usize) -> [usize; 8] {
    let n = g.fluid_len();
    let nx = g.plate_nx();
    let nodes = [
        g.node(i, j),
        g.node((i + 1) % nx, j),
        g.node(i, j + 1),
        g.node((i + 1) % nx, j + 1),
    ];
    let mut d = [0; 8];
    for c in 0..2 {
        for k in 0..4 {
            d[4 * c + k] = c * n + nodes[k];
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::grid::PlateField;

    fn wavy() -> (Grid, Vec<f64>, Vec<f64>) {
        let g = Grid::periodic(12, 6, 2.0).unwrap();
        let w: Vec<f64> = (0..12).map(|i| 0.1 * (std::f64::consts::PI * g.x(i)).sin()).collect();
        let wt: Vec<f64> = (0..12).map(|i| 0.3 * (std::f64::consts::PI * g.x(i)).cos()).collect();
        (g, w, wt)
    }

    #[test]
    fn geometric_conservation_law() {
        // Σ outward mesh flux equals d/dt of the node volume
        let (g, w, wt) = wavy();
        let geo = build_geometry(&PlateField::new(g, w).unwrap(), &PlateField::new(g, wt.clone()).unwrap()).unwrap();
        let ops = FluidOperators::assembled(&geo, &FluidParams::default()).unwrap();
        let mesh: Vec<f64> = ops.faces().iter().map(|f| f.mesh_factor * wt[f.mesh_node]).collect();
        let net = ops.net_outflow(&mesh);
        for (node, v) in net.iter().enumerate() {
            let ip = g.node_split(node).0;
            assert!((v - ops.weight[node] * wt[ip]).abs() < 1e-14);
        }
    }

    #[test]
    fn viscous_matrix_is_symmetric_and_kills_constants_in_x() {
        let (g, w, _) = wavy();
        let geo = build_geometry(&PlateField::new(g, w).unwrap(), &PlateField::zeros(g)).unwrap();
        let ops = FluidOperators::assembled(&geo, &FluidParams::new(2.0, 0.8, 0.3).unwrap()).unwrap();
        let n = ops.n;
        let x: Vec<f64> = (0..2 * n).map(|k| ((k * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let y: Vec<f64> = (0..2 * n).map(|k| ((k * 104729) % 97) as f64 / 40.0 - 1.0).collect();
        let mut ax = vec![0.0; 2 * n];
        let mut ay = vec![0.0; 2 * n];
        ops.a().mul_vec(&x, &mut ax);
        ops.a().mul_vec(&y, &mut ay);
        let (l, r) = (crate::linalg::dot(&y, &ax), crate::linalg::dot(&x, &ay));
        assert!((l - r).abs() < 1e-10 * l.abs().max(1.0));
        assert!(ops.viscous_energy(&x) > 0.0);
        let mut ones = vec![0.0; 2 * n];
        ones[..n].iter_mut().for_each(|v| *v = 1.0);
        assert!(ops.viscous_energy(&ones).abs() < 1e-12);
    }

    #[test]
    fn constant_pressure_exerts_no_interior_force() {
        let (g, w, wt) = wavy();
        let geo = build_geometry(&PlateField::new(g, w).unwrap(), &PlateField::new(g, wt).unwrap()).unwrap();
        let ops = FluidOperators::assembled(&geo, &FluidParams::default()).unwrap();
        let n = ops.n;
        let mut f = vec![0.0; 2 * n];
        ops.b().mul_transpose_add(&vec![1.7; n], &mut f);
        for node in 0..n {
            let j = g.node_split(node).1;
            if j > 0 && j < g.nz {
                assert!(f[node].abs() < 1e-13 && f[n + node].abs() < 1e-13);
            }
        }
    }
}
