use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank-deficient channel: pivot {pivot:e} at column {column} is below {threshold:e}")]
    RankDeficient {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("expected {expected} bits, got {got}")]
    BitCount { expected: usize, got: usize },

    #[error("joint ML search over {candidates} candidates exceeds the guard limit of {limit}")]
    MlGuard { candidates: String, limit: u64 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("dataset file: {0}")]
    DatasetFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
