use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient history: need {needed} states, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("trajectory too short: need {needed} samples, have {available}")]
    TooShort { needed: usize, available: usize },

    #[error("training diverged at epoch {epoch}: validation loss {val_loss} exceeds 10x initial {initial}")]
    DivergenceDetected {
        epoch: usize,
        val_loss: f64,
        initial: f64,
    },

    #[error("empty input")]
    Empty,

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("actuation matrix is singular")]
    SingularActuation,

    #[error("missing representation weights: {0}")]
    MissingWeights(PathBuf),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InsufficientHistory { .. } => "InsufficientHistory",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::NonFinite(_) => "NonFinite",
            Error::NonFiniteState { .. } => "NonFiniteState",
            Error::TooShort { .. } => "TooShort",
            Error::DivergenceDetected { .. } => "DivergenceDetected",
            Error::Empty => "Empty",
            Error::BadParams(_) => "BadParams",
            Error::SingularActuation => "SingularActuation",
            Error::MissingWeights(_) => "MissingWeights",
            Error::Format { .. } => "Format",
            Error::Config(_) => "Config",
            Error::Io { .. } => "IoFailure",
        }
    }
}
