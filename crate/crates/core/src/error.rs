use thiserror::Error;

/// Crate-wide error type.
///
/// Every fallible operation returns one of these; the CLI maps them onto
/// process exit codes (invalid configuration -> 2, verification failure -> 3,
/// i/o -> 4).
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its admissible window (bad exponent window,
    /// unsupported moment order, mismatched mollifier scale, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A query point exceeded the enumerated part of the spectrum.
    #[error("argument {value} outside enumerated range (limit {limit})")]
    OutOfRange { value: f64, limit: f64 },

    /// An enumeration request would materialize more entries than the
    /// configured memory budget allows.
    #[error("cutoff too large: would enumerate ~{estimated} entries (budget {budget})")]
    CutoffTooLarge { estimated: u64, budget: u64 },

    /// Power-law fitting on sign-changing data is meaningless; the caller
    /// must inspect the raw curve instead.
    #[error("power-law fit needs strictly positive values: {0}")]
    NonpositiveValue(String),

    /// Adaptive quadrature could not meet the requested tolerance within its
    /// node budget.
    #[error("quadrature failure: requested tolerance {tolerance:e}, best achieved {achieved:e}")]
    QuadratureFailure { tolerance: f64, achieved: f64 },

    /// The truncated exponential sum would hold more terms than the cap.
    #[error("term budget exceeded: ~{estimated} terms over cap {cap}")]
    TermBudget { estimated: u64, cap: u64 },

    /// A cache file had the wrong magic, version, or length.
    #[error("cache format: {0}")]
    CacheFormat(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
