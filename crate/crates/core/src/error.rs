use thiserror::Error;

/// Errors raised by the modulator, coder, receiver and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("symbol {symbol} is not in the alphabet")]
    SymbolOutOfAlphabet { symbol: f64 },

    #[error("time {tau} lies outside the symbol slot [0, {period}]")]
    OutsideSlot { tau: f64, period: f64 },

    #[error("{family} is not defined for {lt} transmit antennas")]
    FamilyMismatch { family: &'static str, lt: usize },

    #[error("data stream exhausted: block {block} needs {needed} symbols, stream has {available}")]
    DataExhausted {
        block: usize,
        needed: usize,
        available: usize,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient points for a fit: need {needed}, have {available}")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("sequence too long for exhaustive search: {n} symbols (limit {limit})")]
    TooLong { n: usize, limit: usize },

    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
