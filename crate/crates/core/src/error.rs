use thiserror::Error;

/// Errors raised by estimators, criteria, oracles and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("design is rank deficient: numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("observation {index} has leverage one; its deletion is not identifiable")]
    LeverageOne { index: usize },

    #[error("deleting {width} rows around each observation leaves too few rows for {pdim} parameters (T = {t})")]
    BlockTooLarge { width: usize, pdim: usize, t: usize },

    #[error("k = {k} folds is out of range for T = {t}")]
    BadK { k: usize, t: usize },

    #[error("window of {window} observations is unusable for {pdim} parameters with T = {t}")]
    WindowTooSmall { window: usize, pdim: usize, t: usize },

    #[error("bandwidth {0} must be positive and finite")]
    BadBandwidth(f64),

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("bad arguments: {0}")]
    BadArgs(String),

    #[error("mean squared residual is zero; log-MSE is undefined")]
    PerfectFit,

    #[error("nothing to select from")]
    Empty,

    #[error("scores come from different criteria")]
    MixedCriteria,

    #[error("dataset carries no true conditional mean")]
    MissingTruth,

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid data-generating process: {0}")]
    BadSpec(String),

    #[error("invalid candidate grid: {0}")]
    BadGrid(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("invalid experiment: {0}")]
    BadConfig(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Numerical identification failures. The harness drops a candidate that
    /// hits one of these instead of failing the replication.
    pub fn is_identification_failure(&self) -> bool {
        matches!(self, Error::RankDeficient { .. } | Error::LeverageOne { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
