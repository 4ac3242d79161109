use thiserror::Error;

/// Errors surfaced by configuration validation, objective evaluation, and
/// archive I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its contract (bad bounds, illegal
    /// scheme/population pairing, out-of-range parameter, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An argument violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The objective produced a non-finite value; the offending position is
    /// attached for diagnosis.
    #[error("objective returned non-finite value {value} at position {position:?}")]
    Evaluation { value: f64, position: Vec<f64> },

    /// A run archive is missing, incomplete, or inconsistent.
    #[error("archive error: {0}")]
    Archive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
