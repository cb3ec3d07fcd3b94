use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate verbatim id `{0}`")]
    DuplicateId(String),
    #[error("corpus `{0}` contains no verbatims")]
    EmptyCorpus(String),
    #[error("feature dimension must be a nonzero power of two, got {0}")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("feature spaces are incompatible: {0}")]
    IncompatibleFeatureSpace(String),
    #[error("cannot select from an empty pool")]
    EmptyPool,
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("curves cannot be aligned: {0}")]
    CurveMismatch(String),
    #[error("unknown code `{0}`")]
    UnknownCode(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("plot rendering failed: {0}")]
    Plot(String),
}
