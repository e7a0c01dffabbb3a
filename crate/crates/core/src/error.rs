use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("representation error: {0}")]
    Representation(String),
    #[error("body is unbounded in some direction")]
    Unbounded,
    #[error("input is lower dimensional (a section, not a body)")]
    LowerDimensional,
    #[error("section at k = {k} of a body in dimension {dim} is the zero body")]
    DegenerateSection { k: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invariant violated{}: {message}", level.map(|l| format!(" at level {l}")).unwrap_or_default())]
    Invariant {
        level: Option<usize>,
        message: String,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("tolerance not met: achieved gap {gap:e} > {tol:e}")]
    ToleranceNotMet { gap: f64, tol: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invariant(message: impl Into<String>) -> Self {
        Error::Invariant {
            level: None,
            message: message.into(),
        }
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        match self {
            Error::Invariant { message, .. } => Error::Invariant {
                level: Some(level),
                message,
            },
            other => other,
        }
    }
}
