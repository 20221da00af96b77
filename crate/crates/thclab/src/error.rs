//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("invalid noise spectrum: {0}")]
    Spectrum(String),

    #[error("field dimensions {got:?} do not match grid {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("Poisson solve residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    PoissonResidual { residual: f64, tol: f64 },

    #[error("non-finite value in field {field} at step {step}")]
    NonFinite { field: &'static str, step: u64 },

    #[error("solver step {step} failed: {message}")]
    Step { step: u64, message: String },

    #[error("configuration errors:\n{}", format_config_errors(.0))]
    Config(Vec<ConfigError>),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("absorbing-radius quadrature did not converge: {0}")]
    RadiusNonConvergent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One validation failure in a config file, with the line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number; None for cross-field constraint failures.
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn global(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {}: {}", n, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn format_config_errors(errors: &[ConfigError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
