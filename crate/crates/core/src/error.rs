use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record could not be split into the expected fields.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    /// Input was well-formed but violated a domain rule.
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller broke an operation's precondition (mismatched dimensions,
    /// unfiltered labels, incompatible n-gram ranges).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("model artifact format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: String },

    #[error("solver did not converge after {epochs} epochs (objective {objective})")]
    NotConverged {
        epochs: usize,
        objective: f64,
        model: Box<crate::svm::LinearModel>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
