//! Experiment configuration and the text formats for snapshots and time series.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coupling::{CoupledState, SchemeConfig};
use crate::error::Error;
use crate::fluid::{FluidParams, FluidState};
use crate::grid::{Grid, PlateField, ScalarField, Topology, VectorField};
use crate::plate::{BergerParams, ElasticForce, KirchhoffParams, PlateKind, PlateModel, PlateState, ScalarLaw};
use crate::regularity::{threshold_s, DEFAULT_H_DECADES, DEFAULT_RATIO_BOUND};

pub const SCHEMA_VERSION: u32 = 1;
const SNAPSHOT_MAGIC: &str = "# plateflow snapshot";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error(transparent)]
    Numerics(#[from] Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Equilibrium,
    FreeDecay,
    ForcedMms,
    WsuRefinement,
    RegularityScan,
    InvariantSuite,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Equilibrium => "equilibrium",
            Scenario::FreeDecay => "free_decay",
            Scenario::ForcedMms => "forced_mms",
            Scenario::WsuRefinement => "wsu_refinement",
            Scenario::RegularityScan => "regularity_scan",
            Scenario::InvariantSuite => "invariant_suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nz: usize,
    /// Zero for a 2D fluid over a 1D plate.
    #[serde(default)]
    pub ny: usize,
    #[serde(default = "two_pi")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
    #[serde(default = "periodic")]
    pub topology: Topology,
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}
fn one() -> f64 {
    1.0
}
fn periodic() -> Topology {
    Topology::Periodic
}

impl GridConfig {
    pub fn build(&self) -> crate::Result<Grid> {
        if self.ny == 0 {
            Grid::new(self.nx, self.nz, self.lx, self.topology)
        } else {
            Grid::new_3d(self.nx, self.ny, self.nz, self.lx, self.ly, self.topology)
        }
    }

    pub fn with_nx(&self, nx: usize) -> GridConfig {
        let scale = nx as f64 / self.nx as f64;
        GridConfig {
            nx,
            nz: ((self.nz as f64 * scale).round() as usize).max(1),
            ny: (self.ny as f64 * scale).round() as usize,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawConfig {
    Cubic,
    Linear,
    OddPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "linear_kind")]
    pub kind: PlateKind,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub nu_k: f64,
    #[serde(default = "four")]
    pub q_exp: f64,
    #[serde(default)]
    pub r_exp: f64,
    #[serde(default)]
    pub mu_k: f64,
    #[serde(default = "cubic")]
    pub law: LawConfig,
    /// Exponent p of the odd-power law |s|^{p−1}s.
    #[serde(default = "three")]
    pub law_power: f64,
    #[serde(default = "one")]
    pub nu_b: f64,
    #[serde(default)]
    pub g: f64,
}

fn linear_kind() -> PlateKind {
    PlateKind::Linear
}
fn four() -> f64 {
    4.0
}
fn three() -> f64 {
    3.0
}
fn cubic() -> LawConfig {
    LawConfig::Cubic
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: PlateKind::Linear,
            alpha: 0.0,
            nu_k: 1.0,
            q_exp: 4.0,
            r_exp: 0.0,
            mu_k: 0.0,
            law: LawConfig::Cubic,
            law_power: 3.0,
            nu_b: 1.0,
            g: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn build(&self, grid: &Grid) -> crate::Result<PlateModel> {
        let force = match self.kind {
            PlateKind::Linear | PlateKind::ThermoQuasilinear => None,
            PlateKind::Kirchhoff | PlateKind::ThermoSemilinear => Some(ElasticForce::Kirchhoff(KirchhoffParams {
                nu_k: self.nu_k,
                q_exp: self.q_exp,
                r_exp: self.r_exp,
                mu_k: self.mu_k,
                law: match self.law {
                    LawConfig::Cubic => ScalarLaw::Cubic,
                    LawConfig::Linear => ScalarLaw::Linear,
                    LawConfig::OddPower => ScalarLaw::OddPower(self.law_power),
                },
                h: None,
            })),
            PlateKind::Berger => Some(ElasticForce::Berger(BergerParams {
                nu_b: self.nu_b,
                g: self.g,
                h: None,
            })),
            PlateKind::VonKarman => Some(ElasticForce::VonKarman(crate::plate::VonKarmanParams {
                f0: PlateField::zeros(*grid),
                h: None,
            })),
        };
        PlateModel::new(self.kind, self.alpha, force)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Constant density at rest over a flat plate, held by an opposing load.
    Rest,
    /// Constant density at rest, w₀ = amplitude·sin(2π·mode·x/lx).
    SinePlate,
    /// The manufactured solution at t = 0.
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "sine_recipe")]
    pub recipe: Recipe,
    #[serde(default = "one")]
    pub density: f64,
    #[serde(default = "tenth")]
    pub amplitude: f64,
    #[serde(default = "one_usize")]
    pub mode: usize,
    /// Amplitude of v₀ = velocity·cos(2π·mode·x/lx).
    #[serde(default)]
    pub velocity: f64,
    /// Amplitude of θ₀ = theta·cos(2π·mode·x/lx) for the thermal models.
    #[serde(default)]
    pub theta: f64,
}

fn sine_recipe() -> Recipe {
    Recipe::SinePlate
}
fn tenth() -> f64 {
    0.1
}
fn one_usize() -> usize {
    1
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            recipe: Recipe::SinePlate,
            density: 1.0,
            amplitude: 0.1,
            mode: 1,
            velocity: 0.0,
            theta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// Write every n-th stored snapshot to disk.
    #[serde(default = "one_usize")]
    pub cadence: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Snapshot]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_dir(),
            cadence: 1,
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WsuConfig {
    /// Plate resolutions; each must double the previous one.
    #[serde(default = "wsu_levels")]
    pub levels: Vec<usize>,
}

fn wsu_levels() -> Vec<usize> {
    vec![32, 64, 128]
}

impl Default for WsuConfig {
    fn default() -> Self {
        WsuConfig { levels: wsu_levels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "s_grid")]
    pub s_grid: Vec<f64>,
    /// Shifts in multiples of hx.
    #[serde(default = "h_decades")]
    pub h_decades: Vec<usize>,
    #[serde(default = "ratio_bound")]
    pub ratio_bound: f64,
}

fn s_grid() -> Vec<f64> {
    vec![0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]
}
fn h_decades() -> Vec<usize> {
    DEFAULT_H_DECADES.to_vec()
}
fn ratio_bound() -> f64 {
    DEFAULT_RATIO_BOUND
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            s_grid: s_grid(),
            h_decades: h_decades(),
            ratio_bound: ratio_bound(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsConfig {
    #[serde(default = "mms_levels")]
    pub levels: Vec<usize>,
    /// dt ≈ cfl·hx on every level.
    #[serde(default = "quarter")]
    pub cfl: f64,
}

fn mms_levels() -> Vec<usize> {
    vec![16, 32, 64]
}
fn quarter() -> f64 {
    0.25
}

impl Default for MmsConfig {
    fn default() -> Self {
        MmsConfig {
            levels: mms_levels(),
            cfl: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: FluidParams,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub wsu: WsuConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub mms: MmsConfig,
}

impl ExperimentConfig {
    /// Cross-field checks on a parsed configuration.
    pub fn validate(&self) -> IoResult<()> {
        let grid = self.grid.build()?;
        self.params.validate()?;
        self.scheme.validate()?;
        let model = self.model.build(&grid)?;
        threshold_s(self.params.gamma, grid.dim(), model.alpha > 0.0)?;
        if !(self.initial.density > 0.0 && self.initial.density.is_finite()) {
            return Err(IoError::Invalid(format!("initial.density must be > 0, got {}", self.initial.density)));
        }
        if !(self.initial.amplitude.abs() < 1.0) {
            return Err(IoError::Invalid(format!(
                "initial.amplitude must satisfy |a| < 1, got {}",
                self.initial.amplitude
            )));
        }
        if self.output.cadence == 0 {
            return Err(IoError::Invalid("output.cadence must be >= 1".into()));
        }
        let lv = &self.wsu.levels;
        if lv.len() < 2 || lv.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(IoError::Invalid(format!("wsu.levels must double at each step, got {lv:?}")));
        }
        if let Some(s) = self.scan.s_grid.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(IoError::Invalid(format!("scan.s_grid entries must lie in (0, 1), got {s}")));
        }
        if self.scan.h_decades.is_empty() || self.scan.h_decades.contains(&0) {
            return Err(IoError::Invalid("scan.h_decades must be nonempty positive multiples".into()));
        }
        if !(self.scan.ratio_bound >= 1.0) {
            return Err(IoError::Invalid(format!("scan.ratio_bound must be >= 1, got {}", self.scan.ratio_bound)));
        }
        if self.mms.levels.len() < 2 || !(self.mms.cfl > 0.0) {
            return Err(IoError::Invalid("mms needs at least two levels and cfl > 0".into()));
        }
        Ok(())
    }

    /// The configuration with every default written out.
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(src: &str) -> IoResult<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| IoError::Parse {
        line: e.span().map_or(0, |s| line_of(src, s.start)),
        message: e.message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> IoResult<ExperimentConfig> {
    let src = fs::read_to_string(path).map_err(file_err(path))?;
    parse_config(&src)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated table with a header row.
pub fn write_timeseries(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> IoResult<()> {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        if row.len() != columns.len() {
            return Err(IoError::Invalid(format!(
                "row has {} values for {} columns",
                row.len(),
                columns.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|v| fmt_f(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(file_err(path))
}

/// Reads a table written by [`write_timeseries`].
pub fn read_timeseries(path: &Path) -> IoResult<(Vec<String>, Vec<Vec<f64>>)> {
    let src = fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = src.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| IoError::Truncated("missing header".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| {
                c.parse::<f64>().map_err(|e| IoError::Parse {
                    line: k + 2,
                    message: e.to_string(),
                })
            })
            .collect::<IoResult<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(IoError::Truncated(format!("line {} has {} of {} values", k + 2, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// A snapshot on disk: the state plus the fluid parameters it was run with.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: CoupledState,
    pub params: FluidParams,
}

pub fn write_snapshot(path: &Path, state: &CoupledState, params: &FluidParams) -> IoResult<()> {
    fs::write(path, snapshot_text(state, params)).map_err(file_err(path))
}

pub fn snapshot_text(state: &CoupledState, params: &FluidParams) -> String {
    let g = state.grid();
    let mut out = String::new();
    let _ = writeln!(out, "{SNAPSHOT_MAGIC}");
    let _ = writeln!(out, "schema_version = {SCHEMA_VERSION}");
    let _ = writeln!(out, "time = {}", fmt_f(state.time));
    let _ = writeln!(out, "nx = {}", g.nx);
    let _ = writeln!(out, "ny = {}", g.ny);
    let _ = writeln!(out, "nz = {}", g.nz);
    let _ = writeln!(out, "lx = {}", fmt_f(g.lx));
    let _ = writeln!(out, "ly = {}", fmt_f(g.ly));
    let _ = writeln!(out, "hx = {}", fmt_f(g.hx()));
    let _ = writeln!(out, "hz = {}", fmt_f(g.hz()));
    let _ = writeln!(out, "topology = {}", g.topology.as_str());
    let _ = writeln!(out, "gamma = {}", fmt_f(params.gamma));
    let _ = writeln!(out, "mu = {}", fmt_f(params.mu));
    let _ = writeln!(out, "lambda = {}", fmt_f(params.lambda));
    let mut field = |name: &str, vals: &[f64]| {
        let _ = writeln!(out, "[{name}] {}", vals.len());
        for v in vals {
            let _ = writeln!(out, "{}", fmt_f(*v));
        }
    };
    field("r", state.fluid.r.values());
    for c in 0..g.dim() {
        field(&format!("u{c}"), state.fluid.u.comp(c));
    }
    field("w", state.plate.w.values());
    field("v", state.plate.v.values());
    if let Some(th) = &state.plate.theta {
        field("theta", th.values());
    }
    out.push_str("[end]\n");
    out
}

pub fn read_snapshot(path: &Path) -> IoResult<Snapshot> {
    let src = fs::read_to_string(path).map_err(file_err(path))?;
    parse_snapshot(&src)
}

pub fn parse_snapshot(src: &str) -> IoResult<Snapshot> {
    let mut lines = src.lines().enumerate().peekable();
    match lines.next() {
        Some((_, l)) if l == SNAPSHOT_MAGIC => {}
        _ => return Err(IoError::Schema("not a plateflow snapshot".into())),
    }
    let mut header = std::collections::BTreeMap::new();
    while let Some((k, l)) = lines.peek() {
        if l.starts_with('[') {
            break;
        }
        let (key, val) = l.split_once(" = ").ok_or(IoError::Parse {
            line: k + 1,
            message: format!("expected `key = value`, got `{l}`"),
        })?;
        header.insert(key.to_string(), (k + 1, val.to_string()));
        lines.next();
    }
    fn get<T: std::str::FromStr>(h: &std::collections::BTreeMap<String, (usize, String)>, key: &str) -> IoResult<T>
    where
        T::Err: std::fmt::Display,
    {
        let (line, v) = h.get(key).ok_or_else(|| IoError::Schema(format!("missing header key `{key}`")))?;
        v.parse().map_err(|e: T::Err| IoError::Parse {
            line: *line,
            message: format!("{key}: {e}"),
        })
    }
    let version: u32 = get(&header, "schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(IoError::Schema(format!(
            "schema_version {version}, this build reads {SCHEMA_VERSION}"
        )));
    }
    let topology = match get::<String>(&header, "topology")?.as_str() {
        "periodic" => Topology::Periodic,
        "clamped" => Topology::Clamped,
        other => return Err(IoError::Schema(format!("unknown topology `{other}`"))),
    };
    let (nx, ny, nz): (usize, usize, usize) = (get(&header, "nx")?, get(&header, "ny")?, get(&header, "nz")?);
    let (lx, ly): (f64, f64) = (get(&header, "lx")?, get(&header, "ly")?);
    let g = if ny == 0 {
        Grid::new(nx, nz, lx, topology)?
    } else {
        Grid::new_3d(nx, ny, nz, lx, ly, topology)?
    };
    let params = FluidParams::new(get(&header, "gamma")?, get(&header, "mu")?, get(&header, "lambda")?)?;
    let time: f64 = get(&header, "time")?;

    let mut fields = std::collections::BTreeMap::new();
    let mut ended = false;
    while let Some((k, l)) = lines.next() {
        if l == "[end]" {
            ended = true;
            break;
        }
        let rest = l.strip_prefix('[').ok_or(IoError::Parse {
            line: k + 1,
            message: format!("expected a field header, got `{l}`"),
        })?;
        let (name, count) = rest.split_once("] ").ok_or(IoError::Parse {
            line: k + 1,
            message: format!("malformed field header `{l}`"),
        })?;
        let count: usize = count.parse().map_err(|e| IoError::Parse {
            line: k + 1,
            message: format!("field length: {e}"),
        })?;
        let mut vals = Vec::with_capacity(count);
        for _ in 0..count {
            let (k, l) = lines
                .next()
                .ok_or_else(|| IoError::Truncated(format!("field `{name}` ends after {} values", vals.len())))?;
            vals.push(l.parse::<f64>().map_err(|e| IoError::Parse {
                line: k + 1,
                message: e.to_string(),
            })?);
        }
        fields.insert(name.to_string(), vals);
    }
    if !ended {
        return Err(IoError::Truncated("missing [end] marker".into()));
    }
    let has_theta = fields.contains_key("theta");
    let mut take = |name: &str, len: usize| -> IoResult<Vec<f64>> {
        let v = fields
            .remove(name)
            .ok_or_else(|| IoError::Schema(format!("missing field `{name}`")))?;
        if v.len() != len {
            return Err(IoError::Schema(format!("field `{name}` has {} values, expected {len}", v.len())));
        }
        Ok(v)
    };
    let r = take("r", g.fluid_len())?;
    let u = (0..g.dim())
        .map(|c| take(&format!("u{c}"), g.fluid_len()))
        .collect::<IoResult<Vec<_>>>()?;
    let w = take("w", g.plate_len())?;
    let v = take("v", g.plate_len())?;
    let theta = if has_theta {
        Some(PlateField::new(g, take("theta", g.plate_len())?)?)
    } else {
        None
    };
    let fluid = FluidState::new(ScalarField::new(g, r)?, VectorField::new(g, u)?)?;
    let plate = PlateState {
        w: PlateField::new(g, w)?,
        v: PlateField::new(g, v)?,
        theta,
    };
    Ok(Snapshot {
        state: CoupledState::new(fluid, plate, time)?,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("scenario = \"free_decay\"\n[grid]\nnx = 16\nnz = 8\n").unwrap();
        assert_eq!(cfg.params, FluidParams::default());
        assert_eq!(cfg.model.alpha, 0.0);
        assert_eq!(cfg.scheme.cfl_safety, 0.4);
        let again = parse_config(&cfg.resolved_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn config_rejections() {
        let e = parse_config("scenario = \"free_decay\"\nbogus = 1\n[grid]\nnx = 16\nnz = 8\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = parse_config(
            "scenario = \"free_decay\"\n[grid]\nnx = 8\nny = 8\nnz = 8\n[params]\ngamma = 1.5\n[model]\nalpha = 0.0\n",
        )
        .unwrap_err();
        assert!(matches!(e, IoError::Numerics(Error::InadmissibleGamma { .. })), "{e}");
        let e = parse_config("scenario = \"free_decay\"\n[grid]\nnx = 16\nnz = \"x\"\n").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 4, .. }), "{e}");
    }
}
