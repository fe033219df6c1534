use thiserror::Error;

/// Failure modes surfaced by the library.
///
/// Numerical routines return `Err` rather than NaN/∞ whenever a documented
/// precondition is violated or an iteration cannot certify its tolerance.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("growth hypothesis not satisfied: {0}")]
    HypothesisNotSatisfied(String),

    #[error("potential not integrable: {0}")]
    NonIntegrable(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("non-finite value at x = {x}: {context}")]
    NonFinite { x: f64, context: String },

    #[error("bracketing failed: {0}")]
    Bracketing(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("bad table: {0}")]
    Table(String),

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
}

pub type Result<T> = std::result::Result<T, Error>;
