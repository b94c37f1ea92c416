use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic overflow while evaluating {0}")]
    Overflow(String),

    #[error("subset mask was built for n = {mask}, but n = {n} was requested")]
    WidthMismatch { mask: u64, n: u64 },

    #[error("element {element} is outside [1, {n}]")]
    OutOfRange { element: u64, n: u64 },

    #[error("empty set")]
    EmptySet,

    /// Work would exceed the configured enumeration or search budget.
    #[error("budget refusal: {0}")]
    Budget(String),

    #[error("traces carry mixed parameters")]
    MixedParameters,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
