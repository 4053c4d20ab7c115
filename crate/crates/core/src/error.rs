use thiserror::Error;

/// Errors raised while building or analysing kernels and generators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {row} is not a probability vector ({reason})")]
    NonStochasticRow { row: usize, reason: String },

    #[error("supplied stationary law is not fixed by the kernel: |piT - pi|_1 = {residual:e}")]
    NotStationary { residual: f64 },

    #[error("stationary law could not be determined uniquely: {0}")]
    NonUniqueStationary(String),

    #[error("stationary mass {mass:e} at state {state} is below the floor {floor:e}")]
    ZeroMass { state: usize, mass: f64, floor: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("not a probability vector: {0}")]
    NotNormalized(String),

    #[error("density vanishes at state {state}; enable smoothing to trace it")]
    ZeroDensity { state: usize },

    #[error("instance too large for the grid oracle: n = {n}, max {max}")]
    TooLarge { n: usize, max: usize },

    #[error("kernel is not hypercontractive at p = {p}, q = {q} (margin {margin:e})")]
    NotHypercontractive { p: f64, q: f64, margin: f64 },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
