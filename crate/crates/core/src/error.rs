//! Crate-wide error type.
//!
//! Variants are grouped by how callers are expected to react: configuration
//! mistakes are user-fixable, format/input errors point at bad data (with the
//! offending offset or line where known), and `Divergence` signals a numeric
//! failure during training.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (zero time steps, inverted thresholds, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Data rejected before processing (non-finite samples, overlapping
    /// annotations, mismatched lengths, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Tensor/layer geometry mismatch (kernel larger than its input extent,
    /// weight dims that do not match the network description, ...).
    #[error("shape error: {0}")]
    Shape(String),

    /// Malformed serialized data. The message names the byte offset or line.
    #[error("format error: {0}")]
    Format(String),

    /// Recognized but unsupported data (future format versions, EDF features
    /// outside the implemented subset).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
