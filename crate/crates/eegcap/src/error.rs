//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A matrix that must be positive definite failed its factorization.
    #[error("matrix is not positive definite: {context}")]
    NotPositiveDefinite { context: String },

    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Matrix or dataset shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// SNR calibration cannot proceed (e.g. zero signal power).
    #[error("noise calibration failed: {0}")]
    Calibration(String),

    /// A linear solve hit a singular system.
    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    /// MLP training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    /// Variance-weighted R^2 is undefined for all-constant targets.
    #[error("undefined variance: {0}")]
    UndefinedVariance(String),

    /// A sweep cell failed; carries the cell coordinates.
    #[error("cell (n_e={n_e}, snr_db={snr_db}, seed={seed}) failed: {source}")]
    Cell {
        n_e: usize,
        snr_db: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    /// Configuration file or override problem.
    #[error("config error: {0}")]
    Config(String),

    /// File I/O with the offending path attached.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Usage errors (bad flags, bad config) exit with 1; runtime failures with 2.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
