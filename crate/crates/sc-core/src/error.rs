//! Error types shared across the simulator core.

use crate::bitstream::Format;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    /// Value lies outside the encodable range of the stream format.
    #[error("value {value} out of range for {format:?} encoding (callers must clamp or rescale)")]
    OutOfRange { value: f64, format: Format },

    /// Structurally invalid argument (zero length, odd state count, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two streams that must share a length do not.
    #[error("stream length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
