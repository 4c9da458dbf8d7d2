use thiserror::Error;

use crate::sharing::PartyId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} does not fit in the ring: |v| must be below 2^{limit_bits}")]
    Overflow { value: f64, limit_bits: u32 },

    #[error("invalid ring configuration: {0}")]
    Config(String),

    #[error("shape mismatch on axis {axis}: {detail}")]
    Shape { axis: usize, detail: String },

    #[error("reduction over an empty axis {0}")]
    EmptyAxis(usize),

    #[error("outside supported domain: {0}")]
    Domain(String),

    #[error("{to} waited for a message from {from} in round {round} that was never sent")]
    Deadlock { from: PartyId, to: PartyId, round: u64 },

    #[error("malformed payload: {0}")]
    Payload(String),

    #[error("rejected {node}: {reason}")]
    Rejection { node: String, reason: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(axis: usize, detail: impl Into<String>) -> Self {
        Error::Shape { axis, detail: detail.into() }
    }
}
