use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("code has no two distinct rows (max-min distance is 0); no sensitive vector is guaranteed")]
    NoSensitiveGuarantee,

    #[error("no consistent predictor found within {budget} updates")]
    NotRealizable { budget: usize },

    #[error("tolerance unachievable: {0}")]
    ToleranceUnachievable(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("embedding invalid after {attempts} attempts")]
    EmbeddingInvalid { attempts: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
