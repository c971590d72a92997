use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by who is at fault: the caller's configuration, the
/// input data, or the library itself. [`Error::exit_code`] maps each group to
/// the process exit status used by the `antids` binary.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of a kernel function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown attack label {0:?}")]
    UnknownLabel(String),

    #[error("encoding error: feature {feature} has unseen value {value:?}")]
    Encoding { feature: String, value: String },

    #[error("shape error: expected {expected} columns, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("split error: class {class} has {available} records, {requested} requested")]
    Split {
        class: u8,
        available: usize,
        requested: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An operation was called in a state its contract forbids.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("internal invariant breached: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for validation/configuration, 2 for data, 3 for internal breaches.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Validation(_) => 1,
            Error::Parse { .. }
            | Error::UnknownLabel(_)
            | Error::Encoding { .. }
            | Error::Shape { .. }
            | Error::Split { .. }
            | Error::Io { .. } => 2,
            Error::Contract(_) | Error::Internal(_) => 3,
        }
    }
}
