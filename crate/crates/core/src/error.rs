//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the forecasting library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data detected while reading a source file.
    #[error("ingest error at line {line}{}: {reason}", household_suffix(.household))]
    Ingest {
        /// 1-based line number in the source file (0 if not line-specific).
        line: usize,
        /// Household the offending cell belongs to, when known.
        household: Option<String>,
        reason: String,
    },

    /// A raw series contained a negative value; power readings must be nonnegative.
    #[error("household {household}: negative value {value} at index {index}")]
    NegativeValue {
        household: String,
        index: usize,
        value: f64,
    },

    /// The series is too short for the requested operation.
    #[error("series of length {len} is too short; at least {required} samples required")]
    SeriesTooShort { len: usize, required: usize },

    /// No learning pairs survived assembly or filtering.
    #[error("household {household}: empty learning set ({reason})")]
    EmptyLearningSet { household: String, reason: String },

    /// Requested more neighbors than there are rows.
    #[error("k_nn={k} exceeds the number of training rows ({rows})")]
    KnnCount { k: usize, rows: usize },

    /// An operation received an empty input it cannot handle.
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    /// The quantile solver did not reach optimality.
    #[error("solver did not converge for q={quantile} after {iterations} iterations")]
    SolverDiverged { quantile: f64, iterations: usize },

    /// Input vector width does not match the model.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The prediction grid is missing a required quantile level.
    #[error("prediction grid is missing level q={missing:.2}")]
    IncompleteGrid { missing: f64 },

    /// Interval levels violate the symmetry requirement q_u = 1 - q_l.
    #[error("interval levels q_u={upper} and q_l={lower} are not symmetric")]
    AsymmetricInterval { upper: f64, lower: f64 },

    /// Invalid parameter combination.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn household_suffix(household: &Option<String>) -> String {
    match household {
        Some(h) => format!(" (household {h})"),
        None => String::new(),
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
