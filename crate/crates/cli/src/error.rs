// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Failures surfaced to the shell. Each kind maps to a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<parcpt_core::Error> for CliError {
    fn from(e: parcpt_core::Error) -> Self {
        match e {
            parcpt_core::Error::InvalidInput(m) => CliError::Input(m),
            parcpt_core::Error::InvalidConfig(m) => CliError::Config(m),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
