use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A direction collapsed below the linear-dependence threshold.
    #[error("rank deficiency at input {index} (projected norm {norm:.3e})")]
    RankDeficient { index: usize, norm: f64 },

    #[error("all overlap modes discarded by canonical orthogonalization")]
    EmptyBasis,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("state {state} did not converge after {iterations} iterations (E = {energy:.12}, |z'| = {residual:.3e})")]
    NotConverged {
        state: usize,
        iterations: usize,
        energy: f64,
        residual: f64,
    },

    #[error("davidson did not converge after {iterations} iterations; residuals {residuals:?}")]
    DavidsonNotConverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("determinant space too large: {n_det} determinants (limit {limit})")]
    TooLarge { n_det: u64, limit: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
