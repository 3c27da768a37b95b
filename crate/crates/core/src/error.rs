use thiserror::Error;

/// Errors raised by model construction and the exponent solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("row {row} is not stochastic (sum = {sum})")]
    NotStochastic { row: usize, sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter {name} = {value} violates {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("enumeration of {count} items exceeds the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("distribution is not a type for blocklength {k}")]
    NotAType { k: usize },

    #[error("class is empty")]
    EmptyClass,

    #[error("classes have equal slopes; no finite threshold exists")]
    EqualSlopes,

    #[error("curve has fewer than two finite points")]
    DegenerateCurve,

    #[error("alphabet of size {size} exceeds the supported maximum {max}")]
    AlphabetTooLarge { size: usize, max: usize },

    #[error("plan is infeasible: class {class} needs {needed:.6} nats but its type class holds {available:.6}")]
    InfeasiblePlan {
        class: usize,
        needed: f64,
        available: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
