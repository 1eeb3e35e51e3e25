//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the engine, the model zoo, the trainer, the
/// quantizer, and the I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape, channel-count, or parameter contract violations.
    #[error("structural error: {0}")]
    Structural(String),

    /// Malformed file contents (manifest, blob, or image).
    #[error("parse error: {0}")]
    Parse(String),

    /// A calibration record that does not cover the model it is applied to.
    #[error("calibration coverage error: {0}")]
    CalibrationCoverage(String),

    /// An operation that requires a no-clip model received a clipped one.
    #[error("clipped model rejected: {0}")]
    ClippedModel(String),

    /// Training aborted because a loss or gradient became non-finite.
    #[error("non-finite training state: {0}")]
    NonFinite(String),

    /// Empty dataset, corpus, or test set where at least one item is needed.
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
