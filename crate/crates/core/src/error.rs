//! Error type shared by all core modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation received an empty recording, matrix or chunk.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Input exists but is too small for the operation (e.g. a recording
    /// shorter than one window, or a class with fewer rows than parts).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A caller-supplied argument is out of range or inconsistent.
    #[error("bad argument: {0}")]
    BadArgument(String),

    /// Data content violates an invariant (NaN features, label out of range).
    #[error("bad data: {0}")]
    BadData(String),

    /// No sign-unique feature set exists for a scenario.
    #[error("no sign-unique feature set for scenario {scenario}")]
    SignatureNotFound { scenario: String },

    /// Rows tagged as held-out test data reached a training or corruption
    /// path. This is always a caller bug, never a recoverable condition.
    #[error("holdout rows must not enter {operation}")]
    HoldoutViolation { operation: String },
}

pub type Result<T> = std::result::Result<T, Error>;
