use thiserror::Error;

/// Errors raised by the library.
///
/// Statistical degeneracies (a zero count, a zero variance) are not errors:
/// they are reported through status fields on the result types.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LcrError {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input. `line` is 1-based when known.
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    /// The request exceeds a hard size limit of an exact (enumerative) routine.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl LcrError {
    pub fn domain(msg: impl Into<String>) -> Self {
        LcrError::Domain(msg.into())
    }

    pub fn parse(line: Option<usize>, msg: impl Into<String>) -> Self {
        LcrError::Parse {
            line,
            message: msg.into(),
        }
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        LcrError::Capacity(msg.into())
    }
}

impl From<std::io::Error> for LcrError {
    fn from(e: std::io::Error) -> Self {
        LcrError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LcrError>;
