use crate::solver::Trajectory;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent sizes, incompatible grids, malformed configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The time integrator produced a non-finite value.
    #[error("blow-up detected at step {step} (t = {time})")]
    BlowUp {
        step: usize,
        time: f64,
        partial: Box<Trajectory>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
