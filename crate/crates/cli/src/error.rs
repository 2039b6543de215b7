//! Command failures and their exit codes.

use std::io;
use std::path::PathBuf;

use dclaims_core::client::ClientError;
use dclaims_core::publisher::PublisherError;
use dclaims_core::sim::SimError;
use dclaims_core::{ClaimError, LedgerError};
use thiserror::Error;

/// Exit codes are part of the command-line contract.
pub mod exit {
    pub const FAILURE: i32 = 1;
    pub const IO: i32 = 2;
    pub const LEDGER_UNAVAILABLE: i32 = 3;
    pub const INVARIANT: i32 = 4;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no key at {0} (create one with `dclaims keygen`)")]
    MissingKey(PathBuf),
    #[error("no embedded world at {0} (create one with `dclaims init`)")]
    MissingWorld(PathBuf),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Claim(#[from] ClaimError),
    #[error(transparent)]
    Publisher(#[from] PublisherError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingKey(_) | CliError::MissingWorld(_) | CliError::Io { .. } => exit::IO,
            CliError::Client(ClientError::LedgerUnavailable)
            | CliError::Client(ClientError::LedgerRejection(LedgerError::Unavailable))
            | CliError::Publisher(PublisherError::LedgerRejection(LedgerError::Unavailable)) => exit::LEDGER_UNAVAILABLE,
            CliError::Sim(SimError::InvariantViolation { .. }) => exit::INVARIANT,
            CliError::Sim(SimError::Io(_)) => exit::IO,
            _ => exit::FAILURE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
