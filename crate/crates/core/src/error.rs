use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape error: expected a square matrix, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim_mismatch(what: &str, expected: usize, got: usize) -> Self {
        Error::Dimension(format!("{what}: expected dimension {expected}, got {got}"))
    }
}
