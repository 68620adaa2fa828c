use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no inverse of zero")]
    ZeroInverse,

    #[error("singular matrix")]
    Singular,

    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u16),

    #[error("length mismatch: expected {expected} symbols, got {got}")]
    Length { expected: usize, got: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid helper set: {0}")]
    HelperSet(String),

    #[error("decode failed: {0}")]
    Decode(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
