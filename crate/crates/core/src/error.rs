use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter regime violated: {0}")]
    Regime(String),

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("config parse error (line {line}): {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag, used for JSON error lines and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Precondition(_) => "precondition",
            Error::Regime(_) => "regime",
            Error::Propagation(_) => "propagation",
            Error::Geometry(_) => "geometry",
            Error::Config { .. } => "config",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}
