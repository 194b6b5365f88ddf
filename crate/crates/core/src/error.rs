use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a physical law.
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("invalid container: {0}")]
    InvalidContainer(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    /// The inverted quantities do not describe a real container.
    #[error("non-physical result: {0}")]
    NonPhysical(&'static str),
    #[error("no pour detected")]
    NoPour,
    #[error("time ranges do not overlap")]
    NoOverlap,
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}
