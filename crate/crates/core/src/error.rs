//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value was outside the documented domain of an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configuration file or value could not be accepted.
    #[error("config error: {0}")]
    Config(String),

    /// An internal simulation invariant was breached; the run is aborted.
    #[error("engine invariant breached: {0}")]
    Engine(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
