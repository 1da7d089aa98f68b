use serde::{Deserialize, Serialize};

use super::{lcb, BoundResult, BoundSpec, ConfidenceError, Result};
use crate::bandit::{iw_trace, BanditError, LoggedInteraction, Policy};

/// Two-sided interval for a mean reward in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lcb: f64,
    pub ucb: f64,
    /// Bound on the weighted rewards.
    pub lower: BoundResult,
    /// Bound on the weighted complements; `ucb = 1 - upper.lcb`.
    pub upper: BoundResult,
}

/// `w_t (1 - r_t)` for weights `w_t` and rewards `r_t ∈ [0, 1]`.
pub fn complement_rewards(weights: &[f64], rewards: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != rewards.len() {
        return Err(ConfidenceError::DomainError(format!(
            "{} weights for {} rewards",
            weights.len(),
            rewards.len()
        )));
    }
    weights
        .iter()
        .zip(rewards)
        .map(|(&w, &r)| {
            if !(0.0..=1.0).contains(&r) {
                Err(ConfidenceError::RewardOutOfRange(r))
            } else if !(w >= 0.0) || !w.is_finite() {
                Err(ConfidenceError::DomainError(format!("weight {w} must be finite and nonnegative")))
            } else {
                Ok(w * (1.0 - r))
            }
        })
        .collect()
}

/// Lower bound from the weighted rewards and upper bound `1 - LCB` from
/// their complements, each at level `spec.delta`.
pub fn evaluate_interval(r_tilde: &[f64], r_breve: &[f64], spec: &BoundSpec) -> Result<Interval> {
    if r_tilde.len() != r_breve.len() {
        return Err(ConfidenceError::DomainError("trace and complement differ in length".into()));
    }
    let lower = lcb(r_tilde, spec)?;
    let upper = lcb(r_breve, spec)?;
    Ok(Interval {
        lcb: lower.lcb,
        ucb: 1.0 - upper.lcb,
        lower,
        upper,
    })
}

fn bandit_to_confidence(e: BanditError) -> ConfidenceError {
    match e {
        BanditError::RewardOutOfRange(r) => ConfidenceError::RewardOutOfRange(r),
        BanditError::PropensityOutOfRange(p) => ConfidenceError::PropensityOutOfRange(p),
        other => ConfidenceError::DomainError(other.to_string()),
    }
}

/// Interval for the value of `pi` from a log collected by another policy.
/// Both sides hold jointly with probability at least `1 - 2 spec.delta`.
pub fn evaluate_policy_interval(log: &[LoggedInteraction], pi: &Policy, spec: &BoundSpec) -> Result<Interval> {
    let trace = iw_trace(log, pi, true).map_err(bandit_to_confidence)?;
    let complement = trace.complement.expect("complement requested");
    evaluate_interval(&trace.values, &complement, spec)
}
