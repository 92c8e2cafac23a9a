use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: String, msg: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qgauss_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
