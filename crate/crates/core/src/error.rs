use thiserror::Error;

/// Errors raised by the arithmetic and verification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("precision exponent must be at least 1")]
    ZeroPrecision,

    #[error("modulus {p}^{precision} does not fit in 64 bits")]
    ModulusOverflow { p: u64, precision: u32 },

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: String, right: String },

    /// A decision needs valuation information finer than the working precision.
    #[error("precision exhausted: {0}")]
    Precision(String),

    #[error("negative denominator exponent {0}")]
    NegativeExponent(i64),

    /// A structural hypothesis (for example `p > n`) does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("power-sum congruence system is not satisfied")]
    SystemUnsatisfied,

    #[error("resolution mismatch: {0}")]
    Resolution(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An internal claim of a covering algorithm failed; `trace` records the run.
    #[error("algorithm invariant failed: {message}")]
    AlgorithmInvariant { message: String, trace: Vec<String> },
}

pub type Result<T> = std::result::Result<T, LabError>;
