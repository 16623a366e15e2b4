use std::path::PathBuf;

use thiserror::Error;

use crate::solvers::RunTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// Solver produced a non-finite iterate. The partial trace is kept for inspection.
    #[error("solver diverged after {} iterations", .0.evaluations)]
    Diverged(Box<RunTrace>),

    #[error("final epoch holds {have} iterations, need {need}")]
    InsufficientEpoch { have: usize, need: usize },

    #[error("degenerate curvature: Hessian Lipschitz constant must be strictly positive")]
    DegenerateCurvature,

    #[error("theorem hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("inner proximal loop diverged: {0}")]
    InnerDivergence(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown config key `{key}` at line {line}")]
    UnknownKey { line: usize, key: String },

    #[error("missing required config field `{field}` at line {line}")]
    MissingField { line: usize, field: String },

    #[error("malformed graymap {path}: {reason}")]
    Graymap { path: PathBuf, reason: String },

    #[error("malformed trace file: {0}")]
    TraceFormat(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
