//! Error type shared across the simulation library.

use std::fmt;

/// Errors produced by model construction, trace ingestion, scheduling and
/// metric evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// A parameter or configuration value violates an invariant.
    Config(String),
    /// A numeric argument is outside the domain of a model formula.
    Domain(String),
    /// A trace file could not be parsed. Line numbers are 1-based.
    Parse { line: usize, message: String },
    /// Input data is structurally valid but violates a data invariant.
    Validation(String),
    /// A metric is undefined for the given input (e.g. fewer than two spikes).
    UndefinedMetric(String),
    /// An internal invariant that callers rely on was violated.
    Invariant(String),
    /// Filesystem error wrapped with the offending path.
    Io(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(m) => write!(f, "configuration error: {m}"),
            SimError::Domain(m) => write!(f, "domain error: {m}"),
            SimError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            SimError::Validation(m) => write!(f, "validation error: {m}"),
            SimError::UndefinedMetric(m) => write!(f, "undefined metric: {m}"),
            SimError::Invariant(m) => write!(f, "invariant violation: {m}"),
            SimError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
