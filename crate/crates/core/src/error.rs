use std::fmt;

use thiserror::Error;

/// A single reason a setup (or configuration) was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: String,
    pub detail: String,
}

impl Violation {
    pub fn new(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            what: what.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.what, self.detail)
    }
}

/// A configuration error tied to a source line (0 when not line-specific).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum CpiError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sampling rule violated on {plane}: step {step:.4e} m exceeds {max_step:.4e} m")]
    Sampling { plane: String, step: f64, max_step: f64 },

    #[error("setup rejected: {}", join(.0))]
    SetupRejected(Vec<Violation>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{:.1}% of refocus lookups fell outside the tensor (limit 20%)", .fraction * 100.0)]
    RefocusOutOfRange { fraction: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("configuration rejected: {}", join(.0))]
    Config(Vec<ConfigIssue>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CpiError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> CpiError {
    CpiError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
