use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::sample_from;
use super::{BanditError, LoggedInteraction, Policy, Result};

/// Finite-context environment with Bernoulli rewards and exact policy values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularEnv {
    pub context_probs: Vec<f64>,
    /// Expected reward `r̄(x, a)` per context and action.
    pub reward_table: Vec<Vec<f64>>,
    pub behavior: Policy,
}

impl TabularEnv {
    pub fn new(context_probs: Vec<f64>, reward_table: Vec<Vec<f64>>, behavior: Policy) -> Result<Self> {
        if context_probs.is_empty()
            || context_probs.iter().any(|&p| !(p >= 0.0))
            || (context_probs.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(BanditError::InvalidEnv("context probabilities must form a distribution".into()));
        }
        if reward_table.len() != context_probs.len() {
            return Err(BanditError::InvalidEnv("one reward row per context required".into()));
        }
        let k = behavior.num_actions();
        for row in &reward_table {
            if row.len() != k || row.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(BanditError::InvalidEnv(format!(
                    "reward rows need {k} entries in [0, 1]"
                )));
            }
        }
        Ok(Self {
            context_probs,
            reward_table,
            behavior,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.behavior.num_actions()
    }

    /// `n` rounds with contexts `[id]`, actions from the behavior policy and
    /// Bernoulli rewards.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<LoggedInteraction>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut log = Vec::with_capacity(n);
        for _ in 0..n {
            let (x, _) = sample_from(&self.context_probs, &mut rng);
            let ctx = vec![x as f64];
            let (a, p) = self.behavior.sample_action(&ctx, &mut rng)?;
            let r = if rng.random::<f64>() < self.reward_table[x][a] { 1.0 } else { 0.0 };
            log.push(LoggedInteraction::new(ctx, a, r, p)?);
        }
        Ok(log)
    }

    /// `μ(π) = Σ_x p(x) Σ_a π(a|x) r̄(x, a)`.
    pub fn true_value(&self, pi: &Policy) -> Result<f64> {
        let mut v = 0.0;
        for (x, (&px, row)) in self.context_probs.iter().zip(&self.reward_table).enumerate() {
            let probs = pi.action_probs(&[x as f64])?;
            if probs.len() != row.len() {
                return Err(BanditError::DimensionMismatch {
                    expected: row.len(),
                    got: probs.len(),
                });
            }
            v += px * probs.iter().zip(row).map(|(p, r)| p * r).sum::<f64>();
        }
        Ok(v)
    }

    /// Mean and second moment of the importance-weighted reward of `pi`
    /// under the behavior policy. Rewards are binary, so `E[r̃²]` is
    /// `Σ_x p(x) Σ_a π(a|x)² / π_ref(a|x) · r̄(x, a)`.
    pub fn iw_moments(&self, pi: &Policy) -> Result<(f64, f64)> {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (x, (&px, row)) in self.context_probs.iter().zip(&self.reward_table).enumerate() {
            let ctx = [x as f64];
            let p = pi.action_probs(&ctx)?;
            let q = self.behavior.action_probs(&ctx)?;
            for a in 0..row.len() {
                if p[a] > 0.0 {
                    if q[a] == 0.0 {
                        return Err(BanditError::InvalidEnv(
                            "target puts mass where the behavior policy does not".into(),
                        ));
                    }
                    m1 += px * p[a] * row[a];
                    m2 += px * p[a] * p[a] / q[a] * row[a];
                }
            }
        }
        Ok((m1, m2))
    }
}

/// Environment with Zipf(2) contexts and power-law propensities, whose
/// importance weights have a heavy upper tail.
///
/// Context `i` occurs with probability proportional to `1/i²` on
/// `1..=truncation`. The behavior takes action 1 with probability `i^{-β}`;
/// action 1 always pays 1 and action 0 pays `Bernoulli(1 - 1/i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailEnv {
    pub beta: f64,
    pub target: Policy,
    pub truncation: usize,
}

pub const DEFAULT_TRUNCATION: usize = 10_000_000;

type ZipfCache = Mutex<HashMap<usize, Arc<Vec<f64>>>>;

/// Normalized cumulative distribution of the truncated Zipf(2) law, shared
/// between all environments with the same truncation.
fn zipf_cdf(truncation: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<ZipfCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("zipf cache poisoned");
    guard
        .entry(truncation)
        .or_insert_with(|| {
            // sum from the tail for accuracy, then accumulate from the head
            let total: f64 = (1..=truncation).rev().map(|i| 1.0 / (i as f64 * i as f64)).sum();
            let mut acc = 0.0;
            let mut cdf = Vec::with_capacity(truncation);
            for i in 1..=truncation {
                acc += 1.0 / (i as f64 * i as f64) / total;
                cdf.push(acc);
            }
            Arc::new(cdf)
        })
        .clone()
}

impl HeavyTailEnv {
    pub fn new(beta: f64, target: Policy, truncation: usize) -> Result<Self> {
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(BanditError::InvalidEnv(format!("beta must be at least 1, got {beta}")));
        }
        if truncation < 1000 {
            return Err(BanditError::InvalidEnv(format!("truncation must be at least 1000, got {truncation}")));
        }
        if target.num_actions() != 2 {
            return Err(BanditError::InvalidEnv("target must act on two actions".into()));
        }
        Ok(Self {
            beta,
            target,
            truncation,
        })
    }

    /// Uniform target over the two actions with the default truncation.
    pub fn with_uniform_target(beta: f64) -> Result<Self> {
        Self::new(beta, Policy::uniform(2)?, DEFAULT_TRUNCATION)
    }

    pub fn behavior(&self) -> Policy {
        Policy::PowerLaw { beta: self.beta }
    }

    /// Mass of the untruncated Zipf(2) law beyond the truncation point,
    /// bounded by `6/π² · 1/T`.
    pub fn truncation_mass_bound(&self) -> f64 {
        6.0 / (std::f64::consts::PI * std::f64::consts::PI) / self.truncation as f64
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<LoggedInteraction>> {
        let cdf = zipf_cdf(self.truncation);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut log = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let i = cdf.partition_point(|&c| c <= u).min(self.truncation - 1) + 1;
            let p1 = (i as f64).powf(-self.beta);
            let (a, p) = if rng.random::<f64>() < p1 { (1, p1) } else { (0, 1.0 - p1) };
            let r = if a == 1 || rng.random::<f64>() < 1.0 - 1.0 / i as f64 {
                1.0
            } else {
                0.0
            };
            log.push(LoggedInteraction::new(vec![i as f64], a, r, p)?);
        }
        Ok(log)
    }

    /// Exact value of `pi` under the truncated context law:
    /// `Σ_i p(i) [π(1|i) + (1 - π(1|i))(1 - 1/i)]`.
    pub fn true_value(&self, pi: &Policy) -> Result<f64> {
        let mut total = 0.0;
        let mut norm = 0.0;
        for i in (1..=self.truncation).rev() {
            let w = 1.0 / (i as f64 * i as f64);
            let p1 = pi.prob(&[i as f64], 1)?;
            total += w * (p1 + (1.0 - p1) * (1.0 - 1.0 / i as f64));
            norm += w;
        }
        Ok(total / norm)
    }

    /// Value of the configured target.
    pub fn target_value(&self) -> Result<f64> {
        self.true_value(&self.target)
    }
}
