use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("speed set must be non-empty")]
    EmptySpeedSet,

    #[error("speeds must be positive integers, got {0}")]
    NonPositiveSpeed(i128),

    #[error("speed {speed} exceeds the supported maximum {max}")]
    SpeedTooLarge { speed: u64, max: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("residue {a} out of range for modulus {p}")]
    ResidueOutOfRange { a: u64, p: u64 },

    #[error("speed {speed} is divisible by {p}")]
    ZeroResidue { speed: u64, p: u64 },

    #[error("speeds {first} and {second} coincide modulo {p}")]
    DuplicateResidue { first: u64, second: u64, p: u64 },

    #[error("relation bound L={l} must be below p/2 for p={p}")]
    BoundTooLarge { l: u64, p: u64 },

    #[error("epsilon must lie strictly between 0 and 1/2, got {0}")]
    EpsilonOutOfRange(String),

    #[error("threshold must lie in [0, 1/2], got {0}")]
    ThresholdOutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input length {len} does not match modulus {p}")]
    LengthMismatch { len: usize, p: u64 },

    #[error("instance exceeds guard: {0}")]
    GuardExceeded(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),

    #[error("soundness violation: {0}")]
    Soundness(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}
