use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Validation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("length error: {what}: expected {expected} bytes, found {actual}")]
    Length {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("training diverged on client {client}: {detail}")]
    Divergence { client: usize, detail: String },

    #[error("non-finite gradient in layer {layer}, tensor {tensor}")]
    NonFiniteGradient { layer: usize, tensor: &'static str },

    #[error("{}: {source}", path.display())]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse grouping used to pick process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
    Io,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Validation(_) => ErrorCategory::Config,
            Error::Format(_) | Error::Length { .. } | Error::Data(_) | Error::Path { .. } => {
                ErrorCategory::Data
            }
            Error::Protocol(_) | Error::Divergence { .. } | Error::NonFiniteGradient { .. } => {
                ErrorCategory::Numerical
            }
            Error::Io(_) | Error::Csv(_) => ErrorCategory::Io,
        }
    }

    pub(crate) fn path(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Path {
            path: path.into(),
            source,
        }
    }
}
