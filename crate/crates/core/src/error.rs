use thiserror::Error;

use crate::group::GroupElement;

/// Broad classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Caller supplied invalid input (bad parameters, mismatched kinds).
    Usage,
    /// A computation would exceed a documented size or coordinate guard.
    Resource,
    /// A checked mathematical precondition does not hold for the input.
    Verification,
    /// Filesystem failure while writing reports.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate overflow: |{value}| exceeds the limit 2^{}", crate::group::COORDINATE_LIMIT_LOG2)]
    CoordinateOverflow { value: i128 },

    #[error("enumeration index must be >= 1")]
    ZeroIndex,

    #[error("empty set where a nonempty one is required: {0}")]
    EmptySet(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource guard exceeded at n = {n}: {what}")]
    ResourceGuard { n: u64, what: String },

    #[error("observable and point belong to different system kinds")]
    KindMismatch,

    #[error("no finite independence window: {0}")]
    NoFiniteWindow(String),

    #[error("hypothesis of Theorem fails: no finite K")]
    HypothesisFails,

    #[error("windows of {first} and {second} overlap; exact-independence mode needs disjoint reads")]
    OverlappingWindows {
        first: GroupElement,
        second: GroupElement,
    },

    #[error("inconsistent constants: {0}")]
    InconsistentConstants(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::CoordinateOverflow { .. } | Error::ResourceGuard { .. } => ErrorKind::Resource,
            Error::OverlappingWindows { .. } | Error::HypothesisFails => ErrorKind::Verification,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Usage,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
