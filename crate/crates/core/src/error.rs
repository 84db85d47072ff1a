use thiserror::Error;

/// Failure modes of the numerical pipeline.
///
/// Variants map onto the contract classes used throughout the crate: bad
/// arguments, numerical coverage loss, degenerate (zero-norm or massless)
/// states and violated pre-conditions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("degenerate state: {0}")]
    Degenerate(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("ordering error: {0}")]
    Ordering(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
}

pub type Result<T> = std::result::Result<T, Error>;
