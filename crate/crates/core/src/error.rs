use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("malformed {what} at byte offset {offset}: {reason}")]
    Format {
        what: &'static str,
        offset: u64,
        reason: String,
    },

    #[error("unsupported dataset version `{found}` (expected `{expected}`)")]
    Version { found: String, expected: &'static str },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("infeasible balance: vertex {vertex} has weight {weight}, above the per-part limit {limit:.1}")]
    Infeasible { vertex: usize, weight: u64, limit: f64 },

    #[error("instance too large for exhaustive search: {count} candidate assignments (limit {limit})")]
    TooLarge { count: u128, limit: u128 },

    #[error("reports are not comparable: {0}")]
    Comparison(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse category used by front ends to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter { .. } => ErrorKind::Usage,
            Error::Constraint(_) | Error::Infeasible { .. } | Error::TooLarge { .. } => {
                ErrorKind::Constraint
            }
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Constraint,
}
