use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the model, solver and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("power-split ratio rho[{user}] = {value} is outside (0, 1]")]
    SplitOutOfRange { user: usize, value: f64 },

    #[error("expansion point violates constraint {constraint} by {violation:.3e}")]
    InfeasibleExpansion { constraint: String, violation: f64 },

    #[error("split interval for user {user} is empty (lo = {lo:.6e}, hi = {hi:.6e})")]
    EmptySplitInterval { user: usize, lo: f64, hi: f64 },

    #[error("quadratic program is not convex: {0}")]
    NotConvex(String),

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }
}
