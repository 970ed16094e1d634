//! Configuration-driven experiment runner and verification suite.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod run;
pub mod verify;

use thiserror::Error;

/// CLI-level failure, mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("resource cap: {0}")]
    ResourceCap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 = validation error, 3 = check failure, 4 = resource cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::CheckFailed(_) => 3,
            CliError::ResourceCap(_) => 4,
        }
    }
}

impl From<specband_core::Error> for CliError {
    fn from(e: specband_core::Error) -> Self {
        if e.is_resource_cap() {
            CliError::ResourceCap(e.to_string())
        } else if e.is_check_failure() {
            CliError::CheckFailed(e.to_string())
        } else if let specband_core::Error::Io(io) = e {
            CliError::Io(io)
        } else {
            CliError::Validation(e.to_string())
        }
    }
}
