use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size limit exceeded: {what} is {got}, cap is {cap}")]
    SizeLimit {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn mode(msg: impl Into<String>) -> Self {
        Error::Mode(msg.into())
    }
}
