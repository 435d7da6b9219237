use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not a Clifford operation: {0}")]
    NotClifford(String),

    #[error("channel is not invertible (epsilon = {0})")]
    NonInvertibleChannel(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
