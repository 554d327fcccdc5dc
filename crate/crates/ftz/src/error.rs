//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid construction rejected (non power-of-two points, bad extent, ...).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Two fields were combined whose grids differ.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An operation received a field in the wrong domain (space vs frequency).
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// A scalar parameter is out of range (t <= 0, p < 1, c <= 0, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A sample or matrix entry came out non-finite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A numerical consistency check failed (quadrature decay, anchor check).
    #[error("numerical check failed: {0}")]
    Numerical(String),

    /// Experiment configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// A persisted file has the wrong magic, length or field layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
