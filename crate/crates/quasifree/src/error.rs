use thiserror::Error;

/// Error type shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input that no operation contract covers (bad shapes, bad flags).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A documented operation precondition does not hold for the given input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Channel data that parses but fails the validity condition.
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// A construction was requested for a channel that does not admit it.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Inputs outside the scope this crate supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// File or JSON syntax/shape problems.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A postcondition this crate guarantees failed to hold; indicates a bug
    /// or a numerically hostile input far outside documented tolerances.
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
