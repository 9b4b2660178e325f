use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("singular system: R[{pivot}][{pivot}] = {value:e} is below threshold {threshold:e}")]
    SingularPivot { pivot: usize, value: f64, threshold: f64 },

    #[error("Neumann series diverges: lambda*N = {lambda_n:e} does not exceed spectral norm {spectral_norm:e}")]
    NeumannDivergence { spectral_norm: f64, lambda_n: f64 },

    #[error("feature {feature} has zero variance")]
    ZeroVariance { feature: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("polynomial syntax error at byte {offset}: {message}")]
    PolySyntax { offset: usize, message: String },

    #[error("polynomial is not homogeneous (degrees {low} and {high} present)")]
    NotHomogeneous { low: u32, high: u32 },

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
