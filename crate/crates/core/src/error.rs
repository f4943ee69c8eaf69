use thiserror::Error;

use crate::space::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("state spaces differ: {0}")]
    MismatchedSpace(String),

    #[error("invalid state space: {0}")]
    InvalidSpace(String),

    /// A measure failed one of the axioms; `axiom` names it (e.g. "iii*").
    #[error("axiom {axiom} violated: {detail}")]
    InvalidMeasure { axiom: String, detail: String },

    #[error("conditioning event has value {value:e}, too close to zero")]
    NullConditioning { value: f64 },

    /// An observation fell outside Ω; the caller decides how to enlarge the space.
    #[error("observation {0} does not belong to the state space; restart with a richer space")]
    RestartRequired(Label),

    #[error("state space of size {size} exceeds the enumeration cap {cap}")]
    SpaceTooLarge { size: usize, cap: usize },

    #[error("linear program did not terminate: {0}")]
    NumericalFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Influenced atoms outside the admissible range, listed by index.
    #[error("influenced measure invalid at atoms {atoms:?}: {detail}")]
    Validity { atoms: Vec<usize>, detail: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Parse(e.to_string()),
        }
    }
}
