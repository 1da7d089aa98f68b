use serde::{Deserialize, Serialize};

use super::{ConfidenceError, Result};

fn smoothed_term(y: f64, mean: f64, b: f64) -> f64 {
    let d = y - mean;
    d * d / (1.0 + b * d / mean)
}

fn check_b(b: f64) -> Result<()> {
    if (0.0..=1.0).contains(&b) {
        Ok(())
    } else {
        Err(ConfidenceError::DomainError(format!("smoothing level must lie in [0, 1], got {b}")))
    }
}

/// Plug-in estimate of `W_b[Y] = E[(Y - EY)² / (1 + b (Y - EY)/EY)]` with the
/// sample mean standing in for `EY`.
pub fn smoothed_variance(ys: &[f64], b: f64) -> Result<f64> {
    check_b(b)?;
    if ys.is_empty() {
        return Err(ConfidenceError::EmptySample);
    }
    if ys.iter().any(|&y| !(y >= 0.0)) {
        return Err(ConfidenceError::DomainError("support must be nonnegative".into()));
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    if !(mean > 0.0) {
        return Err(ConfidenceError::DomainError("mean must be positive".into()));
    }
    Ok(ys.iter().map(|&y| smoothed_term(y, mean, b)).sum::<f64>() / ys.len() as f64)
}

/// Exact `W_b[Y]` for a finite distribution given as `(value, probability)`.
pub fn smoothed_variance_dist(support: &[(f64, f64)], b: f64) -> Result<f64> {
    check_b(b)?;
    let total: f64 = support.iter().map(|p| p.1).sum();
    if support.is_empty()
        || support.iter().any(|&(y, p)| !(y >= 0.0) || !(p >= 0.0))
        || (total - 1.0).abs() > 1e-9
    {
        return Err(ConfidenceError::DomainError(
            "support must be nonnegative with probabilities summing to one".into(),
        ));
    }
    let mean: f64 = support.iter().map(|&(y, p)| y * p).sum();
    if !(mean > 0.0) {
        return Err(ConfidenceError::DomainError("mean must be positive".into()));
    }
    Ok(support.iter().map(|&(y, p)| p * smoothed_term(y, mean, b)).sum())
}

/// Rate envelope for the betting bounds at sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryEnvelope {
    pub mu: f64,
    pub sigma_sq: f64,
    pub n: usize,
    pub delta: f64,
    /// `ln(√(π(n+1)) / δ²)`
    pub f: f64,
    /// `max(√(48 σ² F / n), 12 μ F / n)`
    pub first_regime: f64,
    /// `√(μ² / (2σ²) · F / n)`
    pub b_star: f64,
    /// `2 √(F/n · W_{b★}[Y])`, when the smoothed variance is supplied.
    pub smoothed_term: Option<f64>,
}

impl TheoryEnvelope {
    pub fn new(mu: f64, sigma_sq: f64, n: usize, delta: f64) -> Result<Self> {
        if !(mu > 0.0) || !(sigma_sq > 0.0) || n == 0 || !mu.is_finite() || !sigma_sq.is_finite() {
            return Err(ConfidenceError::DomainError(format!(
                "envelope needs mu > 0, sigma_sq > 0, n >= 1 (got {mu}, {sigma_sq}, {n})"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ConfidenceError::InvalidDelta(delta));
        }
        let nf = n as f64;
        let f = ((std::f64::consts::PI * (nf + 1.0)).sqrt() / (delta * delta)).ln();
        let first_regime = (48.0 * sigma_sq * f / nf).sqrt().max(12.0 * mu * f / nf);
        let b_star = (mu * mu / (2.0 * sigma_sq) * f / nf).sqrt();
        Ok(Self {
            mu,
            sigma_sq,
            n,
            delta,
            f,
            first_regime,
            b_star,
            smoothed_term: None,
        })
    }

    /// Fills in the refined term from `W_{b★}[Y]` evaluated by the caller.
    pub fn with_smoothed_variance(mut self, w_b_star: f64) -> Self {
        self.smoothed_term = Some(2.0 * (self.f / self.n as f64 * w_b_star).sqrt());
        self
    }
}
