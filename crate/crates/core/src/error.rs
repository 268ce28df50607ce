use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("calibration inconclusive: {0}")]
    CalibrationInconclusive(String),

    #[error("infeasible split: cluster of {nodes} nodes cannot form {parts} parts")]
    InfeasibleSplit { nodes: usize, parts: usize },

    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
