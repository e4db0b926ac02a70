//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors raised by configuration loading, scene synthesis, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented range or two values are
    /// mutually inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A quantity left its mathematical domain (e.g. a non-positive distance).
    #[error("domain error: {0}")]
    Domain(String),

    /// Array arguments with incompatible shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The message-passing recursion produced a non-finite value.  The
    /// iteration index and the trace up to that point are preserved so a
    /// harness can log and exclude the trial.
    #[error("divergence at iteration {iteration}: {detail}")]
    Divergence {
        iteration: usize,
        detail: String,
        trace: Vec<f64>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code category for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Dimension(_) => 2,
            Error::Divergence { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}
