//! Library-wide error type.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between a config file and a DOA estimate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two array dimensions that must agree do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The array geometry cannot support the requested operation
    /// (e.g. a difference coarray whose uniform segment is a single lag).
    #[error("degenerate array geometry: {0}")]
    DegenerateArray(String),

    /// More sources requested than the coarray degrees of freedom allow.
    #[error("too many sources: {requested} requested, at most {max} supported")]
    TooManySources { requested: usize, max: usize },

    /// An estimator could not produce the requested number of DOAs.
    #[error("estimation failure: {0}")]
    EstimationFailure(String),

    /// An iterative numerical routine failed to converge or produced
    /// values outside its guaranteed range.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A Fisher information matrix is too ill-conditioned to invert.
    #[error("singular Fisher information: {0}")]
    SingularInformation(String),

    /// A scenario or experiment file failed to parse.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A binary snapshot file is malformed.
    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }
}
