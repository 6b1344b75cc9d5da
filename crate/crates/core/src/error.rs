use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precedence cycle detected involving task {task}")]
    Cycle { task: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("length mismatch: expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid priority list: {0}")]
    InvalidPriority(String),

    #[error("parse error at line {line} in {section}: {message}")]
    Parse {
        line: usize,
        section: String,
        message: String,
    },

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite loss at epoch {epoch}, scenario {scenario}: {value}")]
    NonFiniteLoss {
        epoch: usize,
        scenario: usize,
        value: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
