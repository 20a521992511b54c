use thiserror::Error;

use crate::moments::Powers;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("population is empty")]
    EmptyPopulation,

    #[error("column lengths differ: y={y}, x={x}, z={z}")]
    LengthMismatch { y: usize, x: usize, z: usize },

    #[error("non-finite value in column {column} at unit {unit}")]
    NonFinite { column: char, unit: usize },

    #[error("population mean of {0} is zero; relative errors are undefined")]
    ZeroMean(char),

    #[error("invalid sample size n={n} for population of N={population}")]
    InvalidSampleSize { n: usize, population: usize },

    #[error("fourth-order terms need N >= {needed}, got N={population}")]
    TooFewUnits { population: usize, needed: usize },

    #[error("V{0} has no closed form; use the exact oracle")]
    NoClosedForm(Powers),

    #[error("V-table has no entry for V{0}")]
    MissingEntry(Powers),

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("non-real power: base {base} raised to {exponent}")]
    NonRealPower { base: f64, exponent: f64 },

    #[error("invalid estimator specification: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{subsets} subsets exceed the enumeration budget of {budget}")]
    BudgetExceeded { subsets: u128, budget: u128 },

    #[error("estimator failed on subset {subset:?}: {reason}")]
    EvaluationFailed { subset: Vec<usize>, reason: String },

    #[error("replication count must be at least 1")]
    ZeroReplications,

    #[error("symbol {0} is undefined in the published expression; supply it explicitly")]
    UndefinedSymbol(&'static str),

    #[error("expansion order must be in 1..=4, got {0}")]
    InvalidOrder(u32),

    #[error("iteration did not converge: {0}")]
    NotConverged(&'static str),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
