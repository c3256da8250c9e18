use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("phase solution infeasible: magnitude {alpha} exceeds 2*rho = {}", 2.0 * rho)]
    PhaseInfeasible { alpha: f64, rho: f64 },

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("SDP solver hit the iteration cap ({0} iterations)")]
    MaxIterations(usize),

    #[error("{path}:{line}: field `{field}`: {message}")]
    Config {
        path: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{path}: parse error at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
