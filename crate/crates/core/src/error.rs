use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}: file not found")]
    NotFound { path: PathBuf },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (this build reads {supported})")]
    Version { found: u32, supported: u32 },

    #[error("size mismatch: expected {expected} bytes of payload, found {found}")]
    SizeMismatch { expected: u64, found: u64 },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("cell (lat {lat}, lon {lon}) mixes land and sea values")]
    MixedCell { lat: usize, lon: usize },

    #[error("csv row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("SVR solver did not converge after {iterations} iterations (KKT gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
