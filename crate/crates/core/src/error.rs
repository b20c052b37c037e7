use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Out-of-domain argument to an operation.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// A serialized artifact is malformed or violates an invariant on load.
    #[error("format error in `{field}`: {reason}")]
    Format { field: String, reason: String },

    /// The Elo likelihood cannot be maximized on this match grid.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Some ratings are unbounded (a group never lost, or never won).
    #[error("ratings diverge for {players:?}: {reason}")]
    Divergence {
        players: Vec<String>,
        reason: String,
    },

    /// Failure inside one replicate of a batch experiment.
    #[error("replicate {index}: {source}")]
    Replicate {
        index: u64,
        #[source]
        source: Box<Error>,
    },

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
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn format(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's arguments rather than the environment.
    pub fn is_parameter_error(&self) -> bool {
        match self {
            Error::Param(_)
            | Error::Format { .. }
            | Error::Estimation(_)
            | Error::Divergence { .. } => true,
            Error::Replicate { source, .. } => source.is_parameter_error(),
            Error::Io { .. } | Error::Csv(_) => false,
        }
    }
}
