use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is singular or not positive definite (min/max eigenvalue ratio {ratio:e})")]
    DegenerateCovariance { ratio: f64 },

    #[error("discriminant rule is undefined: slope vector is zero")]
    UndefinedRule,

    #[error("quadrature did not converge: estimate {estimate}, last change {change:e}")]
    QuadratureAccuracy { estimate: f64, change: f64 },

    #[error("conditional distribution given a missing label is undefined (gamma = {0})")]
    UndefinedConditional(f64),

    #[error("matrix is ill-conditioned ({what}): condition number {condition:e}")]
    IllConditioned { what: &'static str, condition: f64 },

    #[error("record {0} has no class label")]
    UnlabeledRecord(usize),

    #[error("dataset precondition failed: {0}")]
    Dataset(String),

    #[error("log-likelihood is not finite at the supplied parameters")]
    NonFiniteLikelihood,

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
