//! Harness error with CLI exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid experiment configuration; exits 2. Raised before any training.
    #[error("config error: {0}")]
    Config(String),

    /// Required artifacts missing or stale; exits 3.
    #[error("state error: {0}")]
    State(String),

    #[error(transparent)]
    Core(#[from] driftsig_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::State(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
