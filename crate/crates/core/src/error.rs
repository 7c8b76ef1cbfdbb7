use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("angle {0}° outside [-90, 90]")]
    Domain(f64),

    #[error("arcsine argument {argument} out of range (spatial aliasing or estimator failure)")]
    OutOfRange { argument: f64 },

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("link failure: no propagation path between UE and gNB")]
    LinkFailure,

    #[error("calibration failed on port {port}: {reason}")]
    CalibrationFailed { port: usize, reason: String },

    #[error("calibration usage error: {0}")]
    CalibrationUsage(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("no noise subspace: {sources} sources on a {elements}-element array")]
    NoNoiseSubspace { sources: usize, elements: usize },

    #[error("degenerate signal subspace: {0}")]
    DegenerateSubspace(String),

    #[error("UE position {0:?} outside scenario bounds")]
    OutOfBounds([f64; 3]),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
