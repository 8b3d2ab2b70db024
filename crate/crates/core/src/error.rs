use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the simulation engine.
///
/// The variants are grouped into three families that map onto process exit
/// codes (see [`Error::exit_code`]): configuration problems, numerical
/// problems and I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at a singular point (zero distance, zero argument).
    #[error("singularity: {0}")]
    Singularity(String),

    /// A linear system or coefficient conversion is too badly conditioned.
    #[error("ill-conditioned: {message} (condition number {condition:.3e})")]
    Conditioning { message: String, condition: f64 },

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A precomputed table would exceed the configured memory budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn singular(msg: impl Into<String>) -> Self {
        Error::Singularity(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// Process exit code: 2 for configuration/input errors, 3 for numeric or
    /// conditioning errors, 4 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Resource(_) => 2,
            Error::Domain(_) | Error::Singularity(_) | Error::Conditioning { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}
