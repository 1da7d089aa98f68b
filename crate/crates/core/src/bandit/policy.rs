use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BanditError, Result};

const SUM_TOL: f64 = 1e-12;

/// Stochastic or deterministic policy over `K` discrete actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    /// Same action distribution for every context.
    Fixed { probs: Vec<f64> },
    /// One distribution per context id, read from `context[0]`.
    Tabular { table: Vec<Vec<f64>> },
    /// `softmax(W x / τ)` with a `K × d` weight matrix.
    LinearSoftmax { weights: Vec<Vec<f64>>, temperature: f64 },
    /// Point mass on the argmax of `W x` (lowest index on ties).
    Deterministic { weights: Vec<Vec<f64>> },
    /// `(1 - ε)` on the base policy's argmax action plus `ε` spread uniformly.
    EpsilonMixture { base: Box<Policy>, epsilon: f64 },
    /// Binary actions with `π(1 | i) = i^{-β}` for the context index `i ≥ 1`.
    PowerLaw { beta: f64 },
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(BanditError::InvalidPolicy("empty action distribution".into()));
    }
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || (p.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
        return Err(BanditError::InvalidPolicy(format!("not a probability vector: {p:?}")));
    }
    Ok(())
}

fn check_matrix(w: &[Vec<f64>]) -> Result<()> {
    let Some(first) = w.first() else {
        return Err(BanditError::InvalidPolicy("weight matrix has no rows".into()));
    };
    if first.is_empty() || w.iter().any(|r| r.len() != first.len()) {
        return Err(BanditError::InvalidPolicy("weight matrix rows must share a positive length".into()));
    }
    if w.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BanditError::InvalidPolicy("weights must be finite".into()));
    }
    Ok(())
}

fn scores(weights: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
    let d = weights[0].len();
    if x.len() != d {
        return Err(BanditError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    Ok(weights
        .iter()
        .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
        .collect())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax_in_place(s: &mut [f64]) {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in s.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    for v in s.iter_mut() {
        *v /= z;
    }
}

fn context_index(x: &[f64]) -> Result<usize> {
    match x.first() {
        Some(&v) if v >= 0.0 && v.fract() == 0.0 && v.is_finite() => Ok(v as usize),
        _ => Err(BanditError::ContextOutOfRange(format!("expected an integer id, got {x:?}"))),
    }
}

impl Policy {
    pub fn fixed(probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs)?;
        Ok(Policy::Fixed { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(BanditError::InvalidPolicy("need at least one action".into()));
        }
        Ok(Policy::Fixed {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn tabular(table: Vec<Vec<f64>>) -> Result<Self> {
        if table.is_empty() {
            return Err(BanditError::InvalidPolicy("table has no contexts".into()));
        }
        for row in &table {
            check_distribution(row)?;
            if row.len() != table[0].len() {
                return Err(BanditError::InvalidPolicy("rows differ in action count".into()));
            }
        }
        Ok(Policy::Tabular { table })
    }

    pub fn linear_softmax(weights: Vec<Vec<f64>>, temperature: f64) -> Result<Self> {
        check_matrix(&weights)?;
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(BanditError::InvalidPolicy(format!("temperature must be positive, got {temperature}")));
        }
        Ok(Policy::LinearSoftmax { weights, temperature })
    }

    pub fn deterministic(weights: Vec<Vec<f64>>) -> Result<Self> {
        check_matrix(&weights)?;
        Ok(Policy::Deterministic { weights })
    }

    pub fn epsilon_mixture(base: Policy, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(BanditError::InvalidPolicy(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        Ok(Policy::EpsilonMixture {
            base: Box::new(base),
            epsilon,
        })
    }

    pub fn power_law(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(BanditError::InvalidPolicy(format!("beta must be nonnegative, got {beta}")));
        }
        Ok(Policy::PowerLaw { beta })
    }

    pub fn num_actions(&self) -> usize {
        match self {
            Policy::Fixed { probs } => probs.len(),
            Policy::Tabular { table } => table[0].len(),
            Policy::LinearSoftmax { weights, .. } | Policy::Deterministic { weights } => weights.len(),
            Policy::EpsilonMixture { base, .. } => base.num_actions(),
            Policy::PowerLaw { .. } => 2,
        }
    }

    /// Context dimension for the linear kinds.
    pub fn context_dim(&self) -> Option<usize> {
        match self {
            Policy::LinearSoftmax { weights, .. } | Policy::Deterministic { weights } => Some(weights[0].len()),
            Policy::EpsilonMixture { base, .. } => base.context_dim(),
            _ => None,
        }
    }

    pub fn action_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Policy::Fixed { probs } => Ok(probs.clone()),
            Policy::Tabular { table } => {
                let i = context_index(x)?;
                table
                    .get(i)
                    .cloned()
                    .ok_or_else(|| BanditError::ContextOutOfRange(format!("context id {i} not in table")))
            }
            Policy::LinearSoftmax { weights, temperature } => {
                let mut s = scores(weights, x)?;
                for v in s.iter_mut() {
                    *v /= temperature;
                }
                softmax_in_place(&mut s);
                Ok(s)
            }
            Policy::Deterministic { weights } => {
                let s = scores(weights, x)?;
                let mut p = vec![0.0; weights.len()];
                p[argmax(&s)] = 1.0;
                Ok(p)
            }
            Policy::EpsilonMixture { base, epsilon } => {
                let b = base.action_probs(x)?;
                let k = b.len();
                let mut p = vec![epsilon / k as f64; k];
                p[argmax(&b)] += 1.0 - epsilon;
                Ok(p)
            }
            Policy::PowerLaw { beta } => {
                let i = context_index(x)?;
                if i == 0 {
                    return Err(BanditError::ContextOutOfRange("context index must be at least 1".into()));
                }
                let p1 = (i as f64).powf(-beta);
                Ok(vec![1.0 - p1, p1])
            }
        }
    }

    pub fn prob(&self, x: &[f64], a: usize) -> Result<f64> {
        let p = self.action_probs(x)?;
        p.get(a).copied().ok_or(BanditError::ActionOutOfRange {
            action: a,
            k: p.len(),
        })
    }

    /// Most likely action (lowest index on ties).
    pub fn greedy_action(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.action_probs(x)?))
    }

    /// Draws an action and returns it with its exact probability.
    pub fn sample_action(&self, x: &[f64], rng: &mut impl Rng) -> Result<(usize, f64)> {
        let p = self.action_probs(x)?;
        Ok(sample_from(&p, rng))
    }
}

/// Inverse-CDF draw from a probability vector; never returns a zero-probability
/// entry even when rounding leaves the cumulative sum short of one.
pub(crate) fn sample_from(p: &[f64], rng: &mut impl Rng) -> (usize, f64) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > 0.0 {
            last = i;
            acc += v;
            if u < acc {
                return (i, v);
            }
        }
    }
    (last, p[last])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn is_distribution(p: &[f64]) -> bool {
        p.iter().all(|&v| v >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-12
    }

    #[test]
    fn every_kind_yields_a_distribution() {
        let w = vec![vec![0.5, -1.0], vec![2.0, 0.3], vec![-0.7, 0.9]];
        let policies = [
            Policy::uniform(3).unwrap(),
            Policy::linear_softmax(w.clone(), 0.5).unwrap(),
            Policy::deterministic(w.clone()).unwrap(),
            Policy::epsilon_mixture(Policy::deterministic(w).unwrap(), 0.2).unwrap(),
        ];
        for p in &policies {
            for x in [[0.0, 0.0], [1.0, -3.0], [100.0, 40.0]] {
                assert!(is_distribution(&p.action_probs(&x).unwrap()), "{p:?}");
            }
        }
        let pl = Policy::power_law(3.0).unwrap();
        for i in [1.0, 2.0, 10.0, 1e7] {
            assert!(is_distribution(&pl.action_probs(&[i]).unwrap()));
        }
    }

    #[test]
    fn power_law_probabilities() {
        let pl = Policy::power_law(3.0).unwrap();
        assert_eq!(pl.prob(&[2.0], 1).unwrap(), 0.125);
        assert_eq!(pl.prob(&[1.0], 1).unwrap(), 1.0);
        assert!(pl.prob(&[0.0], 1).is_err());
    }

    #[test]
    fn mixture_arithmetic() {
        let always_two = Policy::fixed(vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let m = Policy::epsilon_mixture(always_two, 0.1).unwrap();
        assert!((m.prob(&[], 2).unwrap() - 0.91).abs() < 1e-15);
        assert!((m.prob(&[], 0).unwrap() - 0.01).abs() < 1e-15);
        let u = Policy::epsilon_mixture(Policy::uniform(4).unwrap(), 1.0).unwrap();
        assert_eq!(u.action_probs(&[]).unwrap(), vec![0.25; 4]);
        assert!(Policy::epsilon_mixture(Policy::uniform(2).unwrap(), 0.0).is_err());
    }

    #[test]
    fn softmax_is_stable_for_large_scores() {
        let p = Policy::linear_softmax(vec![vec![1000.0], vec![999.0]], 1.0).unwrap();
        let v = p.action_probs(&[1.0]).unwrap();
        assert!((v[0] - 1.0 / (1.0 + (-1f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn invalid_constructions() {
        assert!(Policy::fixed(vec![0.5, 0.6]).is_err());
        assert!(Policy::tabular(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
        assert!(Policy::linear_softmax(vec![vec![1.0], vec![1.0, 2.0]], 1.0).is_err());
        assert!(Policy::linear_softmax(vec![vec![1.0]], 0.0).is_err());
        let p = Policy::deterministic(vec![vec![1.0, 0.0]]).unwrap();
        assert!(matches!(p.action_probs(&[1.0]), Err(BanditError::DimensionMismatch { .. })));
    }

    #[test]
    fn sampling_never_picks_impossible_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = [0.0, 0.3, 0.0, 0.7, 0.0];
        for _ in 0..10_000 {
            let (a, q) = sample_from(&p, &mut rng);
            assert!(a == 1 || a == 3);
            assert_eq!(q, p[a]);
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let p = Policy::deterministic(vec![vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(p.greedy_action(&[2.0]).unwrap(), 0);
    }
}
