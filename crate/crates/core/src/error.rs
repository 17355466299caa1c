use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver suite.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse instance: {0}")]
    Parse(String),

    /// An instance violates one of its invariants. `field` is a JSON-style path.
    #[error("invalid instance at `{field}`: {message}")]
    InvalidInstance { field: String, message: String },

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("probability {0} outside the open interval (0, 1)")]
    InvalidProbability(f64),

    #[error("{what} needs {size} but the guard allows {limit}")]
    SizeGuard {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidInstance {
            field: field.into(),
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
