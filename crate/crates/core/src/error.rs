use std::fmt;

/// Errors raised by the toolkit.
///
/// Variants are split into input problems (bad subject, unreachable chair,
/// malformed files) and runtime failures; [`Error::is_validation`] tells them
/// apart so front ends can pick an exit status.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{0}")]
    Unreachable(String),

    #[error("need at least {needed} frames, got {got}")]
    TooFewFrames { needed: usize, got: usize },

    #[error("timestamps must be strictly increasing (sample {index})")]
    NonIncreasingTime { index: usize },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("incomplete movement: {0}")]
    IncompleteMovement(String),

    #[error("degenerate skeleton motion: {0}; set the sagittal plane manually")]
    DegeneratePlane(String),

    #[error("tracking gap from {from:.3} s to {to:.3} s exceeds {limit:.3} s")]
    Gap { from: f64, to: f64, limit: f64 },

    #[error("{}", .0)]
    Parse(ParseError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by the run.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

/// A located problem in a text input.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub source: String,
    pub line: usize,
    pub column: Option<String>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.source, self.line)?;
        if let Some(col) = &self.column {
            write!(f, "column '{col}': ")?;
        }
        f.write_str(&self.message)
    }
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
