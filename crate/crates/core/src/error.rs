//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline, from signal validation to
/// model training and report generation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("undefined spectrum: signal carries no power")]
    UndefinedSpectrum,

    #[error("band {band} lies entirely above the Nyquist frequency ({nyquist} Hz)")]
    EmptyBand { band: String, nyquist: f64 },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("unknown label token {0:?}")]
    Label(String),

    #[error("cannot balance classes: {0}")]
    Balance(String),

    #[error("cannot split: {0}")]
    Split(String),

    #[error("cannot partition: {0}")]
    Partition(String),

    #[error("invalid model spec: {0}")]
    Build(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("subject leakage: {0}")]
    Leakage(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
