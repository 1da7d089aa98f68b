//! Logged bandit data, policies, importance weighting and the data
//! generators used by the experiments.

mod classification;
mod env;
pub mod io;
mod policy;

pub use classification::{
    bandit_from_classification, cycled_classifier, synthetic_blobs, train_logistic, ClassificationData, LogisticConfig,
    Standardizer,
};
pub use env::{HeavyTailEnv, TabularEnv, DEFAULT_TRUNCATION};
pub use policy::Policy;
pub(crate) use policy::softmax_in_place;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("propensity {0} outside (0, 1]")]
    PropensityOutOfRange(f64),
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("action {action} outside 0..{k}")]
    ActionOutOfRange { action: usize, k: usize },
    #[error("label {label} outside 0..{k}")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("context not understood by the policy: {0}")]
    ContextOutOfRange(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid environment: {0}")]
    InvalidEnv(String),
    #[error("empty trace")]
    EmptyTrace,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for BanditError {
    fn from(e: std::io::Error) -> Self {
        BanditError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BanditError>;

/// One logged round: context, the action the behavior policy took, the
/// observed reward and the behavior probability of that action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedInteraction {
    pub context: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub propensity: f64,
}

impl LoggedInteraction {
    pub fn new(context: Vec<f64>, action: usize, reward: f64, propensity: f64) -> Result<Self> {
        let rec = Self {
            context,
            action,
            reward,
            propensity,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.reward) {
            return Err(BanditError::RewardOutOfRange(self.reward));
        }
        if !(self.propensity > 0.0 && self.propensity <= 1.0) {
            return Err(BanditError::PropensityOutOfRange(self.propensity));
        }
        Ok(())
    }
}

/// Importance-weighted rewards `r̃_t = π(a_t|x_t)/p_t · r_t` of one policy on
/// one log, optionally with the complements `r̆_t = π(a_t|x_t)/p_t · (1 - r_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IwTrace {
    pub values: Vec<f64>,
    pub complement: Option<Vec<f64>>,
}

pub fn iw_trace(log: &[LoggedInteraction], pi: &Policy, with_complement: bool) -> Result<IwTrace> {
    let mut values = Vec::with_capacity(log.len());
    let mut complement = with_complement.then(|| Vec::with_capacity(log.len()));
    for rec in log {
        rec.validate()?;
        let w = pi.prob(&rec.context, rec.action)? / rec.propensity;
        values.push(w * rec.reward);
        if let Some(c) = complement.as_mut() {
            c.push(w * (1.0 - rec.reward));
        }
    }
    Ok(IwTrace { values, complement })
}

/// Mean of the importance-weighted rewards.
pub fn iw_estimate(trace: &IwTrace) -> Result<f64> {
    if trace.values.is_empty() {
        return Err(BanditError::EmptyTrace);
    }
    Ok(trace.values.iter().sum::<f64>() / trace.values.len() as f64)
}
