use serde::{Deserialize, Serialize};

use super::{check_nu, check_observation, Result, WealthError, WealthEval, WealthMethod};
use crate::numerics::{log_add_exp, log_beta};

/// Mixture weight over the betting fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BetaPrior {
    /// Beta(½, ½)
    #[default]
    Jeffreys,
    /// Beta(1, 1)
    Uniform,
}

impl BetaPrior {
    fn shape(self) -> f64 {
        match self {
            BetaPrior::Jeffreys => 0.5,
            BetaPrior::Uniform => 1.0,
        }
    }

    /// `ln ψ_n(k) = ln B(k + a, n - k + a) - ln B(a, a)`.
    fn log_psi(self, n: usize, k: usize) -> Result<f64> {
        let a = self.shape();
        Ok(log_beta(k as f64 + a, (n - k) as f64 + a)? - log_beta(a, a)?)
    }
}

/// Exact universal-portfolio wealth state.
///
/// `log_y[k]` holds the log of the elementary symmetric polynomial of degree
/// `k` in the observations seen so far, so the wealth at any `ν` is a finite
/// mixture over `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpDpState {
    n: usize,
    log_y: Vec<f64>,
    prior: BetaPrior,
}

impl Default for UpDpState {
    fn default() -> Self {
        Self::new(BetaPrior::default())
    }
}

impl UpDpState {
    pub fn new(prior: BetaPrior) -> Self {
        Self {
            n: 0,
            log_y: vec![0.0],
            prior,
        }
    }

    pub fn from_slice(prior: BetaPrior, ys: &[f64]) -> Result<Self> {
        let mut s = Self::new(prior);
        s.log_y.reserve(ys.len());
        for &y in ys {
            s.push(y)?;
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prior(&self) -> BetaPrior {
        self.prior
    }

    pub fn log_y(&self) -> &[f64] {
        &self.log_y
    }

    pub fn push(&mut self, y: f64) -> Result<()> {
        check_observation(y)?;
        let ly = y.ln();
        self.log_y.push(f64::NEG_INFINITY);
        if ly != f64::NEG_INFINITY {
            for k in (1..=self.n + 1).rev() {
                self.log_y[k] = log_add_exp(ly + self.log_y[k - 1], self.log_y[k]);
            }
        }
        self.n += 1;
        Ok(())
    }

    pub fn log_wealth(&self, nu: f64) -> Result<WealthEval> {
        check_nu(nu)?;
        let ev = self.evaluator()?;
        Ok(WealthEval {
            log_wealth: ev.log_wealth(nu),
            nu,
            method: WealthMethod::Up,
            aux: None,
        })
    }

    /// Freezes the mixture coefficients so that many `ν` can be evaluated in
    /// `O(n)` each without recomputing the prior weights.
    pub fn evaluator(&self) -> Result<UpEvaluator> {
        if self.n == 0 {
            return Err(WealthError::EmptyState);
        }
        let mut coeffs = Vec::with_capacity(self.n + 1);
        for (k, &ly) in self.log_y.iter().enumerate() {
            if ly == f64::NEG_INFINITY {
                // zero observations truncate the polynomial; higher k vanish too
                break;
            }
            coeffs.push(self.prior.log_psi(self.n, k)? + ly);
        }
        Ok(UpEvaluator { coeffs })
    }
}

/// Precomputed `ln ψ_n(k) + ln y^{(n)}(k)` for fast repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct UpEvaluator {
    coeffs: Vec<f64>,
}

impl UpEvaluator {
    /// `ln W^UP(ν)`; callers must pass `ν > 0`.
    pub fn log_wealth(&self, nu: f64) -> f64 {
        let lnu = nu.ln();
        let mut max = f64::NEG_INFINITY;
        for (k, c) in self.coeffs.iter().enumerate() {
            max = max.max(c - k as f64 * lnu);
        }
        if !max.is_finite() {
            return max;
        }
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (c - k as f64 * lnu - max).exp())
            .sum();
        max + s.ln()
    }
}
