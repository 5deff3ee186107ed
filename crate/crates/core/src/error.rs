use thiserror::Error;

/// Errors produced by the solvers and the sweep harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate domain: {0}")]
    Degenerate(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("point ({x}, {y}) is not covered by the grid mask")]
    OutsideMask { x: f64, y: f64 },

    #[error("linear solve failed after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error(
        "Picard iteration diverged (omega = {omega}, {iterations} steps); \
         retry with a smaller omega or a smaller lambda"
    )]
    PicardDivergence { omega: f64, iterations: usize },

    #[error("Picard iteration stalled after {iterations} steps (relative update {update:e})")]
    PicardStalled { iterations: usize, update: f64 },

    #[error("no solution with alpha >= 0 on this branch (lambda = {lambda}, p = {p})")]
    NoNonnegativeSolution { lambda: f64, p: f64 },

    #[error("radial shooting failed: {0}")]
    Shooting(String),

    #[error("{what} hit the iteration cap {iterations} (residual {residual:e}, recent {history:?})")]
    IterationCap {
        what: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("bracket [{lo}, {hi}] does not straddle a sign change of alpha; widen the scan")]
    Bracket { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
