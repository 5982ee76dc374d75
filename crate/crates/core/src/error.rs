use thiserror::Error;

/// Errors produced anywhere in the detection toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid field specification: {0}")]
    InvalidSpec(String),

    #[error("operation unsupported for this input: {0}")]
    Unsupported(String),

    #[error("squeeze pair references a frequency with no mode: offset {0} rad/s")]
    UnknownMode(f64),

    #[error("Fock truncation N={truncation} insufficient: population {population:e} at the top level")]
    TruncationInsufficient { truncation: usize, population: f64 },

    #[error("local oscillator too weak: flux {lo_flux:e}/s < 100 x signal flux {signal_flux:e}/s")]
    WeakLo { lo_flux: f64, signal_flux: f64 },

    #[error("configuration violates a measurement constraint: {0}")]
    ConfigViolation(String),

    #[error("Monte Carlo requires a classical (coherent) input; squeezed state given")]
    NonClassicalInput,

    #[error("emission rate has no finite upper bound on the interval")]
    RateUnbounded,

    #[error("record too short: {duration} s < {required} s needed for {segments} segments")]
    TooShort { duration: f64, required: f64, segments: usize },

    #[error("beatnote unresolved: {0}")]
    Unresolved(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
