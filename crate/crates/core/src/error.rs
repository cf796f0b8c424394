use thiserror::Error;

/// Errors raised by state construction, configuration validation and sampling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkdError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("expected {expected} degrees of freedom, got {actual}")]
    DofMismatch { expected: usize, actual: usize },

    #[error("degree of freedom {index} out of range for {n_dofs} DOFs")]
    DofOutOfRange { index: usize, n_dofs: usize },

    #[error("value {value} outside allowed range {range} for {name}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, QkdError>;
