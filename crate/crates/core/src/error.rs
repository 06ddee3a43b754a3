use thiserror::Error;

/// Errors raised anywhere in the augmentation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file: ragged rows, empty file, bad structure.
    #[error("format error: {0}")]
    Format(String),
    /// Values that violate a data invariant (NaN/Inf, degenerate signal).
    #[error("data error: {0}")]
    Data(String),
    /// Unknown label token, or a sample that cannot be labeled.
    #[error("label error: {0}")]
    Label(String),
    /// A caller-supplied argument is outside its documented domain.
    #[error("argument error: {0}")]
    Argument(String),
    /// A numerical fit failed (e.g. rank-deficient prediction matrix).
    #[error("fit error: {0}")]
    Fit(String),
    /// Training could not proceed (single-class data, non-finite gradients).
    #[error("training error: {0}")]
    Training(String),
    /// Unreadable or inconsistent run configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Broken internal invariant, e.g. mismatched mode lengths.
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
