use thiserror::Error;

/// Errors raised by the kernel library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined
    /// (non-positive time, angle outside an interval, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A level index beyond what the parameter sequences support.
    #[error("level {level} out of range (depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },

    /// Integer or memory capacity exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An address does not carry enough branch labels to name a point at
    /// the requested level.
    #[error("address has {have} branch labels but level {level} needs {need}")]
    AddressTooShort {
        have: usize,
        need: usize,
        level: usize,
    },

    /// The address violates the word conventions of the lattice.
    #[error("invalid address: {0}")]
    InvalidAddress(String),

    /// The certified truncation bound of a limit-kernel evaluation is
    /// above the requested tolerance at the configured depth.
    #[error(
        "insufficient depth: tail bound {achieved:e} exceeds tolerance {tol:e} at depth {depth}"
    )]
    InsufficientDepth {
        achieved: f64,
        tol: f64,
        depth: usize,
    },

    /// Two fields live on different levels or grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Malformed configuration or serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}
