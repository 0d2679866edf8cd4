use sysid_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const UNSTABLE_LOOP: i32 = 3;
    pub const NO_STABLE_CANDIDATE: i32 = 4;
    pub const RANK_DEFICIENT: i32 = 5;
    pub const CAMPAIGN_FAILED: i32 = 6;
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(exit::CONFIG, format!("config: {}", message.into()))
    }

    /// Bad command-line arguments share the config exit code.
    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(exit::CONFIG, message)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::UnstableLoop(_) => exit::UNSTABLE_LOOP,
            CoreError::NoStableCandidate => exit::NO_STABLE_CANDIDATE,
            CoreError::RankDeficient => exit::RANK_DEFICIENT,
            _ => exit::FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(exit::FAILURE, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(exit::FAILURE, e.to_string())
    }
}
