//! Betting wealth processes for a nonnegative stream tested against a
//! candidate mean `ν`.
//!
//! Each process is stored as a streaming state (raw samples, the UP
//! subset-sum table or the LBUP power sums) and can be evaluated at any
//! `ν > 0`. All wealths are reported on the log scale.

pub(crate) mod crp;
mod lbup;
mod pcrp;
mod up;

pub use crp::{crp_log_wealth, CrpParams};
pub use lbup::{lbup_log_partition, LbupState};
pub use pcrp::{pcrp_log_wealth, pcrp_optimal_fraction};
pub use up::{BetaPrior, UpDpState, UpEvaluator};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WealthError {
    #[error("observations must be finite and nonnegative, got {0}")]
    NegativeObservation(f64),
    #[error("wealth of an empty state is undefined")]
    EmptyState,
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("partition function quadrature failed: {0}")]
    QuadratureFailure(NumericsError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, WealthError>;

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(WealthError::DomainError(format!("nu must be finite and positive, got {nu}")))
    }
}

pub(crate) fn check_observation(y: f64) -> Result<()> {
    if y >= 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(WealthError::NegativeObservation(y))
    }
}

/// Which wealth process produced a [`WealthEval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WealthMethod {
    Crp,
    Up,
    PCrp,
    Lbup,
}

/// A log-wealth evaluated at one candidate mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WealthEval {
    pub log_wealth: f64,
    pub nu: f64,
    pub method: WealthMethod,
    /// Maximizing betting fraction, reported by the penalized best CRP.
    pub aux: Option<f64>,
}

/// Ordered nonnegative observations `Y_1, ..., Y_n`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleBuffer {
    values: Vec<f64>,
}

impl SampleBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let mut buf = Self {
            values: Vec::with_capacity(values.len()),
        };
        for &y in values {
            buf.push(y)?;
        }
        Ok(buf)
    }

    pub fn push(&mut self, y: f64) -> Result<()> {
        check_observation(y)?;
        self.values.push(y);
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample mean; zero for an empty buffer.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_rejects_negative_and_nan() {
        let mut b = SampleBuffer::new();
        assert_eq!(b.push(-0.1), Err(WealthError::NegativeObservation(-0.1)));
        assert!(b.push(f64::NAN).is_err());
        b.push(0.0).unwrap();
        b.push(3.0).unwrap();
        assert_eq!(b.values(), &[0.0, 3.0]);
        assert_eq!(b.mean(), 1.5);
    }
}
