use std::path::PathBuf;

/// Errors raised while loading, validating, or writing scene data.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// An invariant violation found on load or construction. `frame` is empty
    /// for values that do not belong to a frame (intrinsics, config).
    #[error("validation failed for frame '{frame}', field '{field}': {message}")]
    Validation {
        frame: String,
        field: String,
        message: String,
    },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("synthetic scene spec is invalid: {0}")]
    EmptySpec(String),

    #[error("ground truth contains no instances; nothing to evaluate")]
    NothingToEvaluate,

    #[error("prediction labels not in the ground-truth vocabulary: {}", .0.join(", "))]
    UnknownLabels(Vec<String>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn validation(
        frame: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Validation {
            frame: frame.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
