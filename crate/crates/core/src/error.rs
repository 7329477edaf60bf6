use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite data: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero x-mean required: {0}")]
    ZeroModeContent(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("remap truncation loss {lost:.3e} exceeds bound {bound:.3e}")]
    RemapLoss { lost: f64, bound: f64 },
    #[error("advective CFL violated: dt = {dt:.3e}, bound = {bound:.3e}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
