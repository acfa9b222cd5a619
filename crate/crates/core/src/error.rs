use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown oracle `{0}`")]
    UnknownOracle(String),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("candidate is not grammar-valid")]
    InvalidCandidate,

    #[error("candidate has no cached property values")]
    MissingProperties,

    #[error("fingerprint width {0} is not a power of two")]
    FingerprintWidth(usize),

    #[error("fingerprint width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),

    #[error("negative input {0} is outside the geometric-mean domain")]
    NegativeInput(f64),

    #[error("non-positive input {0}")]
    NonPositive(f64),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("vocabulary mismatch between policies")]
    VocabularyMismatch,

    #[error("stale snapshot: {0}")]
    StaleSnapshot(String),

    #[error("degenerate front: aggregator output is constant")]
    DegenerateFront,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("training diverged at step {step}: {what}")]
    Diverged { step: usize, what: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
