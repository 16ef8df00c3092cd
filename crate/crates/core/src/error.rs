use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inconsistent scenario: {0}")]
    Inconsistent(String),

    #[error("state blew up at t = {time}: {reason}")]
    BlowUp {
        time: f64,
        reason: String,
        last_state: Vec<f64>,
    },

    #[error("Picard iteration stopped contracting after sweep {sweep} (factors {factors:?})")]
    NonContraction { sweep: usize, factors: Vec<f64> },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Semantic(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
