//! Structured grids on the plate Γ and the fixed fluid rectangle Ω = Γ × (−1, 0).
//!
//! Plate nodes are indexed `ip = k * plate_nx + i`; fluid nodes stack one plate
//! layer per vertical level, `node = j * plate_len + ip`, with `z_j = −1 + j·hz`.
//! Periodic plates carry `nx` nodes per direction, clamped plates `nx + 1`
//! (boundary nodes included).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Periodic,
    Clamped,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Periodic => "periodic",
            Topology::Clamped => "clamped",
        }
    }
}

/// Uniform tensor grid. `ny == 0` means a one-dimensional plate (d = 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub topology: Topology,
}

impl Grid {
    /// Grid with a one-dimensional plate.
    pub fn new(nx: usize, nz: usize, lx: f64, topology: Topology) -> Result<Self> {
        let g = Grid {
            nx,
            ny: 0,
            nz,
            lx,
            ly: 0.0,
            topology,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid with a two-dimensional plate (d = 3).
    pub fn new_3d(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, topology: Topology) -> Result<Self> {
        let g = Grid {
            nx,
            ny,
            nz,
            lx,
            ly,
            topology,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn periodic(nx: usize, nz: usize, lx: f64) -> Result<Self> {
        Self::new(nx, nz, lx, Topology::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 || self.nz < 4 {
            return Err(Error::InvalidGrid(format!(
                "need nx >= 4 and nz >= 4, got nx = {}, nz = {}",
                self.nx, self.nz
            )));
        }
        if self.ny != 0 && self.ny < 4 {
            return Err(Error::InvalidGrid(format!("need ny >= 4, got {}", self.ny)));
        }
        if !(self.lx.is_finite() && self.lx > 0.0) {
            return Err(Error::InvalidGrid(format!("lx must be positive, got {}", self.lx)));
        }
        if self.ny != 0 && !(self.ly.is_finite() && self.ly > 0.0) {
            return Err(Error::InvalidGrid(format!("ly must be positive, got {}", self.ly)));
        }
        Ok(())
    }

    /// Fluid dimension d.
    pub fn dim(&self) -> usize {
        if self.ny == 0 {
            2
        } else {
            3
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        if self.ny == 0 {
            1.0
        } else {
            self.ly / self.ny as f64
        }
    }

    pub fn hz(&self) -> f64 {
        1.0 / self.nz as f64
    }

    pub fn plate_nx(&self) -> usize {
        match self.topology {
            Topology::Periodic => self.nx,
            Topology::Clamped => self.nx + 1,
        }
    }

    pub fn plate_ny(&self) -> usize {
        match (self.ny, self.topology) {
            (0, _) => 1,
            (n, Topology::Periodic) => n,
            (n, Topology::Clamped) => n + 1,
        }
    }

    pub fn plate_len(&self) -> usize {
        self.plate_nx() * self.plate_ny()
    }

    pub fn nodes_z(&self) -> usize {
        self.nz + 1
    }

    pub fn fluid_len(&self) -> usize {
        self.plate_len() * self.nodes_z()
    }

    /// Plate area |Γ|.
    pub fn plate_measure(&self) -> f64 {
        if self.ny == 0 {
            self.lx
        } else {
            self.lx * self.ly
        }
    }

    #[inline]
    pub fn plate_index(&self, i: usize, k: usize) -> usize {
        k * self.plate_nx() + i
    }

    #[inline]
    pub fn plate_coords(&self, ip: usize) -> (usize, usize) {
        let pnx = self.plate_nx();
        (ip % pnx, ip / pnx)
    }

    #[inline]
    pub fn node(&self, ip: usize, j: usize) -> usize {
        j * self.plate_len() + ip
    }

    #[inline]
    pub fn node_split(&self, node: usize) -> (usize, usize) {
        let pl = self.plate_len();
        (node % pl, node / pl)
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn y(&self, k: usize) -> f64 {
        if self.ny == 0 {
            0.0
        } else {
            k as f64 * self.hy()
        }
    }

    pub fn z(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.hz()
    }

    /// Trapezoid weight of a plate node.
    pub fn plate_weight(&self, ip: usize) -> f64 {
        let (i, k) = self.plate_coords(ip);
        let mut wgt = self.hx();
        if self.topology == Topology::Clamped && (i == 0 || i == self.nx) {
            wgt *= 0.5;
        }
        if self.ny != 0 {
            wgt *= self.hy();
            if self.topology == Topology::Clamped && (k == 0 || k == self.ny) {
                wgt *= 0.5;
            }
        }
        wgt
    }

    /// Trapezoid weight in z for level `j`.
    pub fn z_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.nz {
            0.5 * self.hz()
        } else {
            self.hz()
        }
    }

    /// Trapezoid weight of a fluid node (reference volume).
    pub fn fluid_weight(&self, node: usize) -> f64 {
        let (ip, j) = self.node_split(node);
        self.plate_weight(ip) * self.z_weight(j)
    }

    /// True for nodes on the clamped boundary ∂Γ.
    pub fn is_plate_boundary(&self, ip: usize) -> bool {
        if self.topology == Topology::Periodic {
            return false;
        }
        let (i, k) = self.plate_coords(ip);
        i == 0 || i == self.nx || (self.ny != 0 && (k == 0 || k == self.ny))
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.nz == other.nz
            && self.topology == other.topology
            && (self.lx - other.lx).abs() <= 1e-12 * self.lx
            && (self.ly - other.ly).abs() <= 1e-12 * self.ly.max(1.0)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// The same domain with a different resolution.
    pub fn with_resolution(&self, nx: usize, nz: usize) -> Result<Grid> {
        let ny = if self.ny == 0 { 0 } else { self.ny * nx / self.nx };
        let g = Grid { nx, ny, nz, ..*self };
        g.validate()?;
        Ok(g)
    }
}

fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// Samples on the plate grid Γ.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateField {
    grid: Grid,
    values: Vec<f64>,
}

impl PlateField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.plate_len() {
            return Err(Error::GridMismatch(format!(
                "plate field has {} values, grid needs {}",
                values.len(),
                grid.plate_len()
            )));
        }
        check_finite("plate field", &values)?;
        Ok(PlateField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        PlateField {
            grid,
            values: vec![0.0; grid.plate_len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        PlateField {
            grid,
            values: vec![c; grid.plate_len()],
        }
    }

    /// Samples `f(x, y)` at every plate node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.plate_len())
            .map(|ip| {
                let (i, k) = grid.plate_coords(ip);
                f(grid.x(i), grid.y(k))
            })
            .collect();
        PlateField { grid, values }
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.plate_len());
        PlateField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PlateField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &PlateField, f: impl Fn(f64, f64) -> f64) -> Self {
        PlateField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Trapezoid quadrature ∫_Γ f.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(ip, v)| self.grid.plate_weight(ip) * v)
            .sum()
    }

    /// Trapezoid quadrature ∫_Γ f g.
    pub fn inner(&self, other: &PlateField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(ip, (a, b))| self.grid.plate_weight(ip) * a * b)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Samples on the fluid grid Ω, one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.fluid_len() {
            return Err(Error::GridMismatch(format!(
                "scalar field has {} values, grid needs {}",
                values.len(),
                grid.fluid_len()
            )));
        }
        check_finite("scalar field", &values)?;
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.fluid_len()],
        }
    }

    /// Samples `f(x, y, z)` at every fluid node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let values = (0..grid.fluid_len())
            .map(|n| {
                let (ip, j) = grid.node_split(n);
                let (i, k) = grid.plate_coords(ip);
                f(grid.x(i), grid.y(k), grid.z(j))
            })
            .collect();
        ScalarField { grid, values }
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.fluid_len());
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// d components per fluid node, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "vector field has {} components, grid dimension is {}",
                comps.len(),
                grid.dim()
            )));
        }
        for c in &comps {
            if c.len() != grid.fluid_len() {
                return Err(Error::GridMismatch(format!(
                    "vector component has {} values, grid needs {}",
                    c.len(),
                    grid.fluid_len()
                )));
            }
            check_finite("vector field", c)?;
        }
        Ok(VectorField { grid, comps })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            comps: vec![vec![0.0; grid.fluid_len()]; grid.dim()],
        }
    }

    /// Samples `f(x, y, z)` (returning up to three components) at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let d = grid.dim();
        let mut comps = vec![vec![0.0; grid.fluid_len()]; d];
        for n in 0..grid.fluid_len() {
            let (ip, j) = grid.node_split(n);
            let (i, k) = grid.plate_coords(ip);
            let v = f(grid.x(i), grid.y(k), grid.z(j));
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[n] = v[c];
            }
        }
        VectorField { grid, comps }
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, comps: Vec<Vec<f64>>) -> Self {
        VectorField { grid, comps }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<Vec<f64>> {
        self.comps
    }

    pub fn zip_map(&self, other: &VectorField, f: impl Fn(f64, f64) -> f64) -> VectorField {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        VectorField {
            grid: self.grid,
            comps,
        }
    }

    pub fn at(&self, node: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (c, comp) in self.comps.iter().enumerate() {
            v[c] = comp[node];
        }
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dense 3×3 block; only the leading d×d part is used.
pub type Mat = [[f64; 3]; 3];

pub const IDENTITY: Mat = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// A d×d matrix per fluid node.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    values: Vec<Mat>,
}

impl TensorField {
    pub fn new(grid: Grid, values: Vec<Mat>) -> Result<Self> {
        if values.len() != grid.fluid_len() {
            return Err(Error::GridMismatch("tensor field length".into()));
        }
        for (index, m) in values.iter().enumerate() {
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "tensor field",
                    index,
                });
            }
        }
        Ok(TensorField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<Mat>) -> Self {
        TensorField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Mat] {
        &self.values
    }

    pub fn at(&self, node: usize) -> &Mat {
        &self.values[node]
    }
}
