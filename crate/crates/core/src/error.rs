use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A term-sheet invariant is violated; the message names it.
    #[error("invalid bond terms: {0}")]
    InvalidTerms(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-positive price {value} at day {day}")]
    NonPositivePrice { day: i64, value: f64 },

    #[error("non-finite state at path {path}")]
    NonFiniteState { path: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("capacity exceeded: {requested} grid cells requested, limit is {limit}")]
    Capacity { requested: u128, limit: u128 },
}
