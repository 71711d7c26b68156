use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {what} at t = {t}, x = {x:?}")]
    Evaluation { what: &'static str, t: f64, x: Vec<f64> },

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("step limit of {max_steps} exhausted at t = {t}")]
    StepLimit { max_steps: usize, t: f64 },

    #[error("integration diverged after t = {last_time}")]
    Diverged { last_time: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("rate function must be positive, got {value} at t = {t}")]
    InvalidRate { t: f64, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
