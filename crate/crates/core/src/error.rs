use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("return-probability series diverges in dimension {0} (walk is recurrent)")]
    DivergentSeries(usize),

    #[error("invalid charge model: {0}")]
    InvalidModel(String),

    #[error("charge model cannot be embedded exactly: {0}")]
    NotEmbeddable(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("brownian path exhausted after {found} of {needed} unit displacements")]
    InsufficientPath { needed: usize, found: usize },

    #[error("horizon too short: need n >= {needed}, got {got}")]
    InsufficientHorizon { needed: u64, got: u64 },

    #[error("walk left the representable lattice box (|coordinate| >= {0})")]
    LatticeOverflow(i64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, LabError::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
