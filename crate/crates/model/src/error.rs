use std::path::PathBuf;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Training could not start; no optimization step was taken.
    #[error("training setup failed: {0}")]
    Setup(String),

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] pressure_core::Error),

    #[error(transparent)]
    Data(#[from] pressure_data::DataError),

    #[error(transparent)]
    Eval(#[from] pressure_eval::EvalError),
}

impl ModelError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ModelError::InvalidArgument(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        ModelError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ModelError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ModelError> for pressure_core::Error {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Core(c) => c,
            other => pressure_core::Error::InvalidArgument(other.to_string()),
        }
    }
}
