use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input document. `location` names the line/column or the
    /// offending record (e.g. `issues[3]`).
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("unknown link type: {0:?}")]
    UnknownType(String),

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cannot synthesize {requested} non-links: only {available} satisfiable pairs exist")]
    Exhausted { requested: usize, available: usize },

    #[error(
        "cluster split reached test fraction {achieved:.4} (target {target:.4} ±5% relative); try a different seed"
    )]
    SplitTolerance { target: f64, achieved: f64 },

    #[error("unknown issue key: {0}")]
    UnknownKey(String),

    #[error("empty vocabulary: every document is empty after preprocessing")]
    EmptyVocabulary,

    #[error("missing prediction for pair ({0}, {1})")]
    MissingPrediction(String, String),

    #[error("invalid slice: {0}")]
    InvalidSlice(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
