use mib_core::MibError;
use thiserror::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    /// Classifies a library error raised while loading input.
    pub fn data(e: MibError) -> Self {
        match e {
            MibError::InvalidParameter(_) | MibError::UnknownTarget(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }

    /// Classifies a library error raised during computation or output.
    pub fn runtime(e: MibError) -> Self {
        match e {
            MibError::InvalidParameter(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
