use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("sample {0} is empty")]
    EmptySample(&'static str),

    #[error("sample {sample} contains a non-finite value at position {index}")]
    NonFinite { sample: &'static str, index: usize },

    #[error("cross-sample ties at value(s) {values:?}")]
    Tie { values: Vec<f64> },

    #[error("exact distribution requires m to be a multiple of n (n={n}, m={m})")]
    UnsupportedSampleRatio { n: u64, m: u64 },

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series did not reach tolerance within {max_index} terms (tail bound {bound:e})")]
    Truncation { max_index: usize, bound: f64 },

    #[error("enumeration of {sequences} label sequences exceeds the limit of {limit}; use simulation instead")]
    EnumerationTooLarge { sequences: String, limit: u64 },

    #[error("table cache: {0}")]
    Cache(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn out_of_range(what: &'static str, detail: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            detail: detail.into(),
        }
    }
}
