use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("state variant does not match the model")]
    VariantMismatch,

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("demodulation error: {0}")]
    Demod(String),

    #[error("initialization failed: {0}")]
    InitFailure(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::InitFailure(_) | Error::Protocol(_)
        )
    }
}
