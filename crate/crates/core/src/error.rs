use std::fmt;

use thiserror::Error;

/// Failure raised by a stream source while producing its next element.
#[derive(Debug, Error)]
pub enum SourceError {
    #[error("i/o error while reading stream: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse input record at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("signal generator fault at step {step}: {reason}")]
    Generator { step: u64, reason: String },
}

impl SourceError {
    /// Line number of a parse failure, if that is what this is.
    pub fn line(&self) -> Option<usize> {
        match self {
            SourceError::Parse { line, .. } => Some(*line),
            SourceError::Io(_) | SourceError::Generator { .. } => None,
        }
    }
}

/// Which quantity a dimension check was applied to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub what: &'static str,
    pub expected: usize,
    pub found: usize,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected {}, found {}", self.what, self.expected, self.found)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("decay factor {0} outside [0, 1)")]
    LambdaOutOfRange(f64),
    #[error("dimension mismatch ({0})")]
    DimensionMismatch(Shape),
    #[error("non-finite value in {0}")]
    NonFiniteValue(&'static str),
    #[error("snapshot digest does not match network spec")]
    DigestMismatch,
    #[error("unsupported snapshot version {0}")]
    VersionUnsupported(u32),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("invalid signal spec: {0}")]
    InvalidSpec(String),
    #[error("activation {0} is unbounded; supply an explicit bound")]
    UnboundedActivation(&'static str),
    #[error("activation {0} does not satisfy sigma(0) = 0")]
    InvalidActivation(&'static str),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("lag {lag} out of range for a stream of {len} inputs")]
    LagOutOfRange { lag: usize, len: usize },
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(what: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch(Shape { what, expected, found })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
