use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent Pauli string length on line {line}: expected {expected}, got {found}")]
    InconsistentLength {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{n} qubits exceeds the dense-simulation cap of {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("unknown basis label `{0}`")]
    UnknownBasis(String),

    #[error("scheme mismatch: model is `{model}`, dataset is `{dataset}`")]
    SchemeMismatch { model: String, dataset: String },

    #[error("no measured basis is compatible with Hamiltonian term `{0}`")]
    IncompatibleTerm(String),

    #[error("refusing to overwrite existing file {0} (pass --force)")]
    WouldOverwrite(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
