use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const DIVERGED: i32 = 3;
    pub const THRESHOLD_NOT_REACHED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] poswise_core::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Data(poswise_core::Error::InvalidArgument(_))
            | CliError::Data(poswise_core::Error::UnsupportedPairing { .. }) => exit::USAGE,
            CliError::Data(_) | CliError::Output { .. } => exit::DATA,
        }
    }
}
