use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("homography fit failed: {0}")]
    FitFailure(String),

    /// Malformed bytes that did not come from a named file.
    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a file path to an in-memory decoding error.
    pub fn at_path(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Corrupt(message) | Error::InvalidArgument(message) => Error::Format {
                path: path.into(),
                message,
            },
            other => other,
        }
    }
}
