use thiserror::Error;

/// Errors produced by the solver, the estimate harness and the CLI plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("dimension mismatch: expected {expected} samples, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("time step too large at t = {t}: CFL number {cfl:.4} exceeds {limit:.4}")]
    StepSize { t: f64, cfl: f64, limit: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed artifact: {0}")]
    Artifact(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
