//! Crate-wide error type with stable machine-readable codes.

use std::path::PathBuf;

/// Coarse failure class, used by callers (e.g. the CLI) to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad inputs: malformed files, dimension mismatches, out-of-range arguments.
    Validation,
    /// The inputs were well formed but the computation broke down numerically.
    Numerical,
}

/// Which Kronecker factor an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorSide {
    /// The K x K row-covariance factor.
    Left,
    /// The J x J column-covariance factor.
    Right,
}

impl std::fmt::Display for FactorSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FactorSide::Left => write!(f, "left"),
            FactorSide::Right => write!(f, "right"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("non-finite value at trial {trial}, row {row}, col {col}")]
    NonFinite { trial: usize, row: usize, col: usize },

    #[error("invalid argument: {context}")]
    InvalidArgument { context: String },

    #[error("class {class} has no trials")]
    EmptyClass { class: u8 },

    #[error("label {label} outside {{1, 2}} at trial {trial}")]
    InvalidLabel { label: u64, trial: usize },

    #[error("payload size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },

    #[error("axis {axis} out of range: model has q={q} discriminant directions")]
    AxisOutOfRange { axis: usize, q: usize },

    #[error("model carries no wavelet metadata; time-domain synthesis unavailable")]
    MissingWaveletMetadata,

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },

    #[error("matrix is not positive semi-definite (largest eigenvalue {lambda_max:.3e})")]
    NotPositiveSemiDefinite { lambda_max: f64 },

    #[error(
        "singular {side} covariance factor (eigenvalue {eigenvalue:.3e}); consider a ridge > 0"
    )]
    SingularFactor { side: FactorSide, eigenvalue: f64 },

    #[error("degenerate input: zero within-class scatter")]
    DegenerateInput,

    #[error("insufficient degrees of freedom: no class has at least 2 trials")]
    InsufficientTrials,

    #[error("model internal inconsistency: {context}")]
    CorruptedModel { context: String },

    #[error("decomposition did not converge: {context}")]
    NoConvergence { context: String },
}

impl Error {
    /// Stable single-token code for machine-parsable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not-square",
            Error::NotSymmetric { .. } => "not-symmetric",
            Error::DimensionMismatch { .. } => "dim-mismatch",
            Error::NonFinite { .. } => "non-finite",
            Error::InvalidArgument { .. } => "invalid-argument",
            Error::EmptyClass { .. } => "empty-class",
            Error::InvalidLabel { .. } => "invalid-label",
            Error::SizeMismatch { .. } => "size-mismatch",
            Error::AxisOutOfRange { .. } => "axis-out-of-range",
            Error::MissingWaveletMetadata => "missing-wavelet-metadata",
            Error::Io { .. } => "io",
            Error::Malformed { .. } => "malformed",
            Error::NotPositiveSemiDefinite { .. } => "not-positive-semi-definite",
            Error::SingularFactor { .. } => "singular-factor",
            Error::DegenerateInput => "degenerate-input",
            Error::InsufficientTrials => "insufficient-trials",
            Error::CorruptedModel { .. } => "corrupted-model",
            Error::NoConvergence { .. } => "no-convergence",
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::NotPositiveSemiDefinite { .. }
            | Error::SingularFactor { .. }
            | Error::DegenerateInput
            | Error::CorruptedModel { .. }
            | Error::NoConvergence { .. } => ErrorCategory::Numerical,
            _ => ErrorCategory::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
