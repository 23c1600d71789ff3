use thiserror::Error;

/// Errors raised by the coverage library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("quadrature did not converge at {panels} panels (achieved residual {residual:e})")]
    Quadrature { panels: usize, residual: f64 },

    #[error("sub-region {index} is degenerate (workload {workload:e})")]
    DegenerateSubregion { index: usize, workload: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("workload floor violated at t = {time} after {halvings} step halvings")]
    GuardExhausted { time: f64, halvings: u32 },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("no target candidate converged for agent {index}; residual gradients {residuals:?}")]
    TargetSearch { index: usize, residuals: Vec<f64> },

    #[error("ring protocol error: {0}")]
    Protocol(String),
}

impl CoverageError {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CoverageError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = CoverageError> = std::result::Result<T, E>;
