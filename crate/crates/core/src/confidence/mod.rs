//! Lower and upper confidence bounds for the mean of a nonnegative stream.
//!
//! The betting bounds (UP, pCRP★, LBUP) invert a wealth process through
//! Ville's inequality: every candidate mean whose wealth reaches `1/δ` is
//! rejected and the bound is the smallest survivor. The empirical-Bernstein
//! style bounds and the adaptive-bet baseline are provided for comparison.

mod betting;
mod eb;
mod evaluate;
mod theory;
mod wswrkm;

pub use betting::{betting_lcb, Accumulator};
pub use eb::{eb_relaxation_lcb, maurer_eb_lcb};
pub use evaluate::{complement_rewards, evaluate_interval, evaluate_policy_interval, Interval};
pub use theory::{smoothed_variance, smoothed_variance_dist, TheoryEnvelope};
pub use wswrkm::{wswrkm_bet, wswrkm_lcb};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;
use crate::wealth::{BetaPrior, WealthError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfidenceError {
    #[error("confidence level delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("invalid method parameter: {0}")]
    InvalidHyper(String),
    #[error("unknown bound method `{0}`")]
    UnknownMethod(String),
    #[error("no observations")]
    EmptySample,
    #[error("accumulator does not match the {0} method")]
    MismatchedAccumulator(BoundMethod),
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("propensity {0} outside (0, 1]")]
    PropensityOutOfRange(f64),
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error(transparent)]
    Wealth(#[from] WealthError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ConfidenceError>;

/// Bound construction and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundMethod {
    /// Exact universal portfolio wealth.
    Up { prior: BetaPrior },
    /// Penalized best constant-rebalanced wealth.
    PCrp,
    /// Power-sum lower bound on the uniform-prior UP wealth.
    Lbup { r: usize },
    /// Closed-form empirical-Bernstein relaxation of the pCRP★ bound.
    EbRelax,
    /// `μ̂ - √(2 V̂ ln(2/δ) / n)`.
    MaurerEb,
    /// Adaptive-bet wealth with a regularized running variance.
    Wswrkm { c: f64, sigma0_sq: f64 },
}

impl BoundMethod {
    pub fn wswrkm(sigma0_sq: f64) -> Self {
        BoundMethod::Wswrkm { c: 0.5, sigma0_sq }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundMethod::Lbup { r: 0 } => {
                Err(ConfidenceError::InvalidHyper("LBUP order must be at least 1".into()))
            }
            BoundMethod::Wswrkm { c, sigma0_sq } => {
                if !(0.25..=0.75).contains(&c) {
                    return Err(ConfidenceError::InvalidHyper(format!("c must lie in [1/4, 3/4], got {c}")));
                }
                if !(sigma0_sq > 0.0) || !sigma0_sq.is_finite() {
                    return Err(ConfidenceError::InvalidHyper(format!(
                        "sigma0_sq must be positive, got {sigma0_sq}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundMethod::Up { prior: BetaPrior::Jeffreys } => write!(f, "up"),
            BoundMethod::Up { prior: BetaPrior::Uniform } => write!(f, "up-uniform"),
            BoundMethod::PCrp => write!(f, "pcrp"),
            BoundMethod::Lbup { r } => write!(f, "lbup{r}"),
            BoundMethod::EbRelax => write!(f, "eb-relax"),
            BoundMethod::MaurerEb => write!(f, "maurer-eb"),
            BoundMethod::Wswrkm { c, sigma0_sq } => {
                if *c == 0.5 {
                    write!(f, "wswrkm:{sigma0_sq}")
                } else {
                    write!(f, "wswrkm:{sigma0_sq}:{c}")
                }
            }
        }
    }
}

impl FromStr for BoundMethod {
    type Err = ConfidenceError;

    /// Accepts `up`, `up-uniform`, `pcrp`, `lbup<r>`, `eb-relax`,
    /// `maurer-eb` and `wswrkm[:sigma0_sq[:c]]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let unknown = || ConfidenceError::UnknownMethod(s.clone());
        let m = match s.as_str() {
            "up" => BoundMethod::Up {
                prior: BetaPrior::Jeffreys,
            },
            "up-uniform" => BoundMethod::Up {
                prior: BetaPrior::Uniform,
            },
            "pcrp" => BoundMethod::PCrp,
            "eb-relax" => BoundMethod::EbRelax,
            "maurer-eb" | "eb" => BoundMethod::MaurerEb,
            "wswrkm" => BoundMethod::wswrkm(1.0),
            other => {
                if let Some(r) = other.strip_prefix("lbup") {
                    let r = r.trim_start_matches(':').parse().map_err(|_| unknown())?;
                    BoundMethod::Lbup { r }
                } else if let Some(rest) = other.strip_prefix("wswrkm:") {
                    let mut parts = rest.split(':');
                    let sigma0_sq = parts
                        .next()
                        .and_then(|p| p.parse().ok())
                        .ok_or_else(unknown)?;
                    let c = match parts.next() {
                        Some(p) => p.parse().map_err(|_| unknown())?,
                        None => 0.5,
                    };
                    if parts.next().is_some() {
                        return Err(unknown());
                    }
                    BoundMethod::Wswrkm { c, sigma0_sq }
                } else {
                    return Err(unknown());
                }
            }
        };
        m.validate()?;
        Ok(m)
    }
}

/// A bound method at a confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub method: BoundMethod,
    pub delta: f64,
}

impl BoundSpec {
    pub fn new(method: BoundMethod, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ConfidenceError::InvalidDelta(delta));
        }
        method.validate()?;
        Ok(Self { method, delta })
    }

    /// Same method at level `δ / k`, for a union bound over `k` statistics.
    pub fn split(&self, k: usize) -> Result<Self> {
        Self::new(self.method, self.delta / k.max(1) as f64)
    }
}

/// Extra information about how a bound was found.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Optimal betting fraction at the returned bound (pCRP★ only).
    pub inner_b: Option<f64>,
    /// Set when the wealth was seen to re-cross the threshold above the bound.
    pub non_monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub lcb: f64,
    pub converged: bool,
    pub bracket_width: f64,
    pub diagnostics: Diagnostics,
}

impl BoundResult {
    pub(crate) fn zero(converged: bool) -> Self {
        Self {
            lcb: 0.0,
            converged,
            bracket_width: 0.0,
            diagnostics: Diagnostics::default(),
        }
    }

    pub(crate) fn closed_form(lcb: f64) -> Self {
        Self {
            lcb: lcb.max(0.0),
            converged: true,
            bracket_width: 0.0,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Lower confidence bound of `spec.method` at level `1 - spec.delta` for the
/// mean of the nonnegative observations `ys`.
pub fn lcb(ys: &[f64], spec: &BoundSpec) -> Result<BoundResult> {
    if ys.is_empty() {
        return Err(ConfidenceError::EmptySample);
    }
    match spec.method {
        BoundMethod::EbRelax => eb_relaxation_lcb(ys, spec.delta),
        BoundMethod::MaurerEb => maurer_eb_lcb(ys, spec.delta),
        BoundMethod::Wswrkm { .. } => wswrkm_lcb(ys, spec),
        m => betting_lcb(&Accumulator::from_slice(m, ys)?, spec),
    }
}

pub(crate) fn check_samples(ys: &[f64]) -> Result<()> {
    if ys.is_empty() {
        return Err(ConfidenceError::EmptySample);
    }
    for &y in ys {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(WealthError::NegativeObservation(y).into());
        }
    }
    Ok(())
}

pub(crate) fn mean_and_biased_variance(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for name in ["up", "up-uniform", "pcrp", "lbup1", "lbup2", "eb-relax", "maurer-eb", "wswrkm:1", "wswrkm:0.0001"] {
            let m: BoundMethod = name.parse().unwrap();
            assert_eq!(m.to_string().parse::<BoundMethod>().unwrap(), m);
        }
        assert_eq!("wswrkm".parse::<BoundMethod>().unwrap(), BoundMethod::wswrkm(1.0));
        assert!("lbup0".parse::<BoundMethod>().is_err());
        assert!("wswrkm:1:0.9".parse::<BoundMethod>().is_err());
        assert!("bogus".parse::<BoundMethod>().is_err());
    }

    #[test]
    fn delta_must_be_a_level() {
        for d in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(BoundSpec::new(BoundMethod::PCrp, d).is_err());
        }
        let s = BoundSpec::new(BoundMethod::PCrp, 0.1).unwrap().split(4).unwrap();
        assert!((s.delta - 0.025).abs() < 1e-15);
    }

    #[test]
    fn all_zero_data_gives_zero_for_every_method() {
        let ys = vec![0.0; 50];
        for name in ["up", "up-uniform", "pcrp", "lbup1", "lbup2", "eb-relax", "maurer-eb", "wswrkm"] {
            let spec = BoundSpec::new(name.parse().unwrap(), 0.1).unwrap();
            let r = lcb(&ys, &spec).unwrap();
            assert_eq!(r.lcb, 0.0, "{name}");
        }
    }

    #[test]
    fn empty_sample_is_an_error() {
        let spec = BoundSpec::new(BoundMethod::PCrp, 0.1).unwrap();
        assert_eq!(lcb(&[], &spec), Err(ConfidenceError::EmptySample));
    }
}
