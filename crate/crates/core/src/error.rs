use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("collision: min(1+w) = {min_gap:.6e} at plate node {node} (threshold {threshold})")]
    Collision {
        min_gap: f64,
        node: usize,
        threshold: f64,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },
    #[error("negative density {value} at node {node}")]
    NegativeDensity { node: usize, value: f64 },
    #[error("vacuum: density {value} below floor at node {node}")]
    Vacuum { node: usize, value: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("solver breakdown: {0}")]
    SolverBreakdown(String),
    #[error("solver divergence: {0}")]
    Divergence(String),
    #[error("shift {h} is not a multiple of the grid spacing {hx}")]
    ShiftNotOnGrid { h: f64, hx: f64 },
    #[error("empty shift set")]
    EmptyShiftSet,
    #[error("operation requires a periodic plate")]
    NotPeriodic,
    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },
    #[error("plate state carries no temperature")]
    MissingTemperature,
    #[error("inadmissible test pair: {0}")]
    InadmissibleTest(String),
    #[error("trajectories are not synchronized at index {index}: {t1} vs {t2}")]
    Desynchronized { index: usize, t1: f64, t2: f64 },
    #[error("strong-state density {value} at node {node} outside [{lo}, {hi}]")]
    OutOfBand {
        node: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("gamma = {gamma} is not admissible for d = {d}, alpha > 0: {alpha_positive} (needs gamma > {bound})")]
    InadmissibleGamma {
        gamma: f64,
        d: usize,
        alpha_positive: bool,
        bound: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    InitialData(#[from] InitialDataError),
}

/// One variant per violated compatibility condition on the initial data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitialDataError {
    #[error("rho0 = {rho} at node {node} carries nonzero momentum")]
    MomentumInVacuum { node: usize, rho: f64 },
    #[error("kinetic energy density is not finite at node {node}")]
    InfiniteKineticEnergy { node: usize },
    #[error("negative initial density {rho} at node {node}")]
    NegativeDensity { node: usize, rho: f64 },
    #[error("clamped data violated at plate node {node}: w0 = {w}, normal slope = {slope}")]
    ClampedBoundary { node: usize, w: f64, slope: f64 },
    #[error("w0 = {w} <= -1 at plate node {node}")]
    PlateBelowBottom { node: usize, w: f64 },
    #[error("initial fields live on different grids")]
    GridMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;
