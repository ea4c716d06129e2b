//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by every pipeline stage.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (malformed CSV, overlapping
    /// intervals, mismatched dimensions, ...).
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// A quantity has no defined value for this input (single-class AUC,
    /// silhouette with fewer than two clusters, ...).
    #[error("undefined: {0}")]
    Undefined(String),

    /// An iterative solver exhausted its budget without meeting tolerance.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// A serialized artifact or report carries an unsupported schema version.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::RejectedInput(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
