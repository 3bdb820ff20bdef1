use thiserror::Error;

use crate::lp::LpError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The characteristic integration produced a non-finite state.
    #[error("integration blew up for particle {particle} at t = {time}")]
    BlowUp { particle: usize, time: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{nodes} nodes exceed the pair-constraint cap of {cap}")]
    NodeCap { nodes: usize, cap: usize },

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Every problem found while validating a configuration document.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{experiment} experiment failed")]
    Experiment { experiment: &'static str, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
