//! Error type shared by every evaluator.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("term evaluation failed at index {index:?}: {msg}")]
    TermEvaluation { index: Vec<usize>, msg: String },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("pole hit at t = {0}")]
    PoleHit(Complex64),
    #[error("index error: {0}")]
    Index(String),
    #[error("sampler exhausted for {id} (M={m}) after {attempts} attempts")]
    SamplerExhausted { id: String, m: usize, attempts: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type QResult<T> = Result<T, QError>;

/// Rejects NaN and infinities with a message naming the quantity.
pub fn finite(z: Complex64, what: &str) -> QResult<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(QError::NonFinite(what.to_string()))
    }
}
