//! Scalar numerical kernel shared by the wealth and bound computations.
//!
//! Everything here is a pure function of its inputs: bracketed root finding,
//! one-dimensional concave maximization, log-domain accumulation, log-gamma
//! family special functions and adaptive quadrature on the unit interval.

mod optimize;
mod quadrature;
pub(crate) mod root;
mod special;

pub use optimize::maximize_concave_1d;
pub use quadrature::{integrate, integrate_01, integrate_01_detailed, Integral};
pub use root::{bisect_root, Bracket};
pub use special::{ln_gamma, log_beta, lower_incomplete_gamma_ln};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("bracket [{lo}, {hi}] has no sign change (f(lo)={f_lo}, f(hi)={f_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("tolerance not reached within {0} iterations")]
    MaxIterExceeded(usize),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Stopping rule for the iterative routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_x: f64,
    pub rel_x: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_x: 1e-10,
            rel_x: 1e-10,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn new(abs_x: f64, rel_x: f64, max_iter: usize) -> Result<Self> {
        if !(abs_x > 0.0) || !(rel_x > 0.0) || max_iter == 0 {
            return Err(NumericsError::DomainError(format!(
                "tolerance requires abs_x > 0, rel_x > 0, max_iter >= 1 (got {abs_x}, {rel_x}, {max_iter})"
            )));
        }
        Ok(Self {
            abs_x,
            rel_x,
            max_iter,
        })
    }

    /// Width below which an interval around `x` counts as converged.
    pub(crate) fn width_at(&self, x: f64) -> f64 {
        self.abs_x.max(self.rel_x * x.abs())
    }
}

/// `ln(e^a + e^b)` with `-inf` as the additive identity.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(v_i)`, shifted by the maximum so large inputs do not overflow.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(NumericsError::EmptyInput);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if max.is_infinite() || max.is_nan() {
        return Ok(max);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}
