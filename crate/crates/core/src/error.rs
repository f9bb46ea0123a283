use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the enhancement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty signal")]
    EmptySignal,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("unsupported channel count: {0}")]
    UnsupportedChannelCount(u16),

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("zero-energy {0}")]
    ZeroEnergy(&'static str),

    #[error("time {t} outside guarded interval [{lo}, {hi}]")]
    TimeGuard { t: f64, lo: f64, hi: f64 },

    #[error("invalid process parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate prior in bin {bin}: var_x + var_n = 0")]
    DegeneratePrior { bin: usize },

    #[error("backward called without a recorded forward pass")]
    NoCachedForward,

    #[error("degenerate reference span (clean and noise are collinear)")]
    DegenerateSpan,

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("manifest already exists at {0} (use --force to overwrite)")]
    ManifestExists(PathBuf),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("wav: {0}")]
    Wav(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
