use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MibError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MibError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("target column '{0}' not found in header")]
    UnknownTarget(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("imputer '{imputer}' failed on fold {fold}: {source}")]
    Imputer {
        imputer: String,
        fold: usize,
        #[source]
        source: Box<MibError>,
    },
}

impl MibError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        MibError::InvalidParameter(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(MibError::DimensionMismatch { expected, found })
        }
    }
}
