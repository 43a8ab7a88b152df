use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::analytics::StatsError;
use crate::ingest::IngestError;
use crate::mutation::MutationError;
use crate::oracle::OracleError;
use crate::pairing::PairingError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error. Each variant maps onto exactly one process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Process exit codes: 0 success, 1 input error, 2 oracle unavailable,
/// 3 statistical-input error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Input = 1,
    OracleUnavailable = 2,
    StatsInput = 3,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Error::Oracle(e) | Error::Pairing(PairingError::Oracle(e)) | Error::Mutation(MutationError::Oracle(e))
                if e.is_unavailable() =>
            {
                ExitCode::OracleUnavailable
            }
            Error::Stats(e) if !e.is_plain_input() => ExitCode::StatsInput,
            _ => ExitCode::Input,
        }
    }
}
