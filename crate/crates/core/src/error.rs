//! Error type shared across the crate.
//!
//! Errors fall in two classes that callers (notably the CLI) treat
//! differently: `Validation` for malformed inputs, files, or flags, and
//! `Numerical` for failures inside otherwise well-posed computations
//! (singular matrices, non-convergence, quadrature breakdown).

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn io(path: impl Into<String>, err: &std::io::Error) -> Self {
        Error::Io { path: path.into(), message: err.to_string() }
    }

    pub fn csv(msg: impl Into<String>) -> Self {
        Error::Csv(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::Csv(_) | Error::Invalid(_) => ErrorKind::Validation,
            Error::Numerical(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
