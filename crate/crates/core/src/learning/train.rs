use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{add_softmax_grad, inverse_behavior, record_dprobs};
use super::{objective_value, Family, LearningError, Objective, Result};
use crate::bandit::{LoggedInteraction, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub temperature: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            temperature: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(LearningError::InvalidConfig(format!("learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(LearningError::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(LearningError::InvalidConfig(format!("temperature {}", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPolicy {
    pub stochastic: Policy,
    /// Argmax of the same scores; this is the policy that gets evaluated.
    pub deterministic: Policy,
    /// Full-log objective after each epoch.
    pub epoch_objective: Vec<f64>,
}

/// Minibatch stochastic gradient ascent from zero weights on a `K × d`
/// linear-softmax policy, `d` being the context length of the log.
///
/// Each step moves by `learning_rate` times the batch-mean gradient. For the
/// score-function family the objective is divided by `β` first (same argmax),
/// so the step size does not shrink with `β`.
pub fn train_policy(
    obj: &Objective,
    log: &[LoggedInteraction],
    num_actions: usize,
    behavior: Option<&Policy>,
    cfg: &TrainConfig,
) -> Result<TrainedPolicy> {
    cfg.validate()?;
    let Some(first) = log.first() else {
        return Err(LearningError::DomainError("cannot train on an empty log".into()));
    };
    if num_actions == 0 {
        return Err(LearningError::InvalidConfig("need at least one action".into()));
    }
    let d = first.context.len();
    if d == 0 {
        return Err(LearningError::DomainError("linear policies need a nonempty context".into()));
    }
    let inv = inverse_behavior(obj, log, behavior)?;
    let scale = match obj.family {
        Family::Score(_) if obj.beta > 0.0 => 1.0 / obj.beta,
        _ => 1.0,
    };
    let mut weights = vec![vec![0.0; d]; num_actions];
    let mut grad = vec![vec![0.0; d]; num_actions];
    let mut g = vec![0.0; num_actions];
    let mut probs = vec![0.0; num_actions];
    let mut order: Vec<usize> = (0..log.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epoch_objective = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().flatten().for_each(|v| *v = 0.0);
            let step = scale / batch.len() as f64;
            for &t in batch {
                let rec = &log[t];
                softmax_probs(&weights, &rec.context, cfg.temperature, &mut probs)?;
                record_dprobs(obj, &probs, rec, inv.as_ref().map(|v| v[t].as_slice()), &mut g)?;
                add_softmax_grad(&probs, &g, &rec.context, cfg.temperature, step, &mut grad);
            }
            for (w, gr) in weights.iter_mut().zip(&grad) {
                for (wv, gv) in w.iter_mut().zip(gr) {
                    *wv += cfg.learning_rate * gv;
                }
            }
        }
        let pi = Policy::linear_softmax(weights.clone(), cfg.temperature)?;
        epoch_objective.push(objective_value(obj, log, &pi, behavior)?);
    }
    Ok(TrainedPolicy {
        stochastic: Policy::linear_softmax(weights.clone(), cfg.temperature)?,
        deterministic: Policy::deterministic(weights)?,
        epoch_objective,
    })
}

fn softmax_probs(weights: &[Vec<f64>], x: &[f64], temperature: f64, out: &mut [f64]) -> Result<()> {
    if x.len() != weights[0].len() {
        return Err(crate::bandit::BanditError::DimensionMismatch {
            expected: weights[0].len(),
            got: x.len(),
        }
        .into());
    }
    for (o, row) in out.iter_mut().zip(weights) {
        *o = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() / temperature;
    }
    crate::bandit::softmax_in_place(out);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::ScoreFunction;

    fn toy_log() -> Vec<LoggedInteraction> {
        // action 0 pays when x > 0, action 1 when x < 0; uniform logging
        (0..200)
            .map(|t| {
                let x = if t % 2 == 0 { 1.0 } else { -1.0 };
                let a = (t / 2) % 2;
                let r = if (x > 0.0) == (a == 0) { 1.0 } else { 0.0 };
                LoggedInteraction::new(vec![x, 1.0], a, r, 0.5).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_epochs_is_uniform() {
        let obj = Objective::new(Family::Iw, 0.0).unwrap();
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let t = train_policy(&obj, &toy_log(), 2, None, &cfg).unwrap();
        assert_eq!(t.stochastic.action_probs(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert!(t.epoch_objective.is_empty());
    }

    #[test]
    fn iw_training_improves_and_separates() {
        let obj = Objective::new(Family::Iw, 0.0).unwrap();
        let log = toy_log();
        let t = train_policy(&obj, &log, 2, None, &TrainConfig::default()).unwrap();
        let start = objective_value(&obj, &log, &Policy::uniform(2).unwrap(), None).unwrap();
        let mut prev = start;
        for &v in &t.epoch_objective {
            assert!(v >= prev - 1e-9);
            prev = v;
        }
        assert_eq!(t.deterministic.greedy_action(&[1.0, 1.0]).unwrap(), 0);
        assert_eq!(t.deterministic.greedy_action(&[-1.0, 1.0]).unwrap(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let obj = Objective::score(ScoreFunction::Freezing, 0.3).unwrap();
        let cfg = TrainConfig { seed: 9, epochs: 5, ..TrainConfig::default() };
        let a = train_policy(&obj, &toy_log(), 2, None, &cfg).unwrap();
        let b = train_policy(&obj, &toy_log(), 2, None, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let obj = Objective::new(Family::Iw, 0.0).unwrap();
        let cfg = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(train_policy(&obj, &toy_log(), 2, None, &cfg).is_err());
        assert!(train_policy(&obj, &[], 2, None, &TrainConfig::default()).is_err());
    }
}
