use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unusable input data (empty matrix, non-finite entry, bad CSV).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter outside its admissible range (k, epsilon, p, K, w, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A metric that is not defined on the given labels (e.g. single class).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("model parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported model version {found} (this build reads version {supported})")]
    Version { found: u64, supported: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::InvalidInput(err.to_string())
    }
}
