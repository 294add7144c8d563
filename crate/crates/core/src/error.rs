use std::path::PathBuf;

use thiserror::Error;

use crate::driver::StepReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid value for `{key}`: {constraint}")]
    Validation { key: String, constraint: String },

    #[error("linear solver failed after {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    LinearSolver {
        iterations: usize,
        residual: f64,
        target: f64,
        history: Vec<f64>,
    },

    #[error("singular matrix at pivot row {0}")]
    Singular(usize),

    #[error("outer iteration did not converge in step {}: |dS| = {:.3e} after {} iterations", .0.step, .0.final_delta, .0.outer_iterations)]
    NotConverged(Box<StepReport>),

    #[error("index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::LinearSolver { .. } | Error::Singular(_) | Error::NotConverged(_)
        )
    }
}
