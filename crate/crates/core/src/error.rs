//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by data generation, model training and inference.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numeric input or intermediate value is NaN or infinite.
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    /// Two collections that must agree in size do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An operation requires a non-empty input.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A ranking metric needs both positive and negative labels.
    #[error("labels contain a single class; both classes are required")]
    SingleClass,

    /// A linear system cannot be solved as posed.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// A model method that requires fitted state was called before `fit`.
    #[error("model not fitted: {0}")]
    NotFitted(String),

    /// A structured text input (CSV, JSON) failed validation.
    #[error("schema error: {0}")]
    Schema(String),

    /// A specific line of a text input failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A directed graph that must be acyclic contains a cycle.
    #[error("graph cycle detected: {0}")]
    GraphCycle(String),

    /// A named graph node does not exist.
    #[error("unknown node: {0}")]
    UnknownNode(String),

    /// Observed evidence has probability zero under the model.
    #[error("evidence has zero probability under the model: {0}")]
    ZeroProbabilityEvidence(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
