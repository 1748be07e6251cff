use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("unknown layout {0:?}")]
    UnknownLayout(String),
    #[error("state space exceeds {limit} states")]
    StateSpaceOverflow { limit: usize },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Neural(#[from] smashvat_neural::NeuralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
