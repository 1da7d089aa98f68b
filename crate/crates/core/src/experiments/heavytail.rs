use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_delta, config_err, derive_seed, quantile, ExperimentReport, ReportRow, Result};
use crate::bandit::{iw_trace, HeavyTailEnv, Policy, DEFAULT_TRUNCATION};
use crate::confidence::{lcb, BoundMethod, BoundSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailConfig {
    pub beta: f64,
    /// Target policy; the uniform policy when `None`.
    pub target: Option<Policy>,
    pub methods: Vec<BoundMethod>,
    pub checkpoints: Vec<usize>,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
}

impl Default for HeavyTailConfig {
    fn default() -> Self {
        Self {
            beta: 3.0,
            target: None,
            methods: vec![
                BoundMethod::PCrp,
                BoundMethod::MaurerEb,
                BoundMethod::wswrkm(1e-4),
                BoundMethod::wswrkm(1.0),
                BoundMethod::wswrkm(1e4),
            ],
            checkpoints: vec![10, 100, 1000, 10_000],
            trials: 100,
            delta: 0.1,
            seed: 0,
        }
    }
}

/// Per-method bound trajectories: `out[trial][method][checkpoint]`, with the
/// sample mean appended as the last "method" and the empirical fourth moment
/// after it.
pub(crate) fn heavytail_trials(env: &HeavyTailEnv, cfg: &HeavyTailConfig) -> Result<Vec<Vec<Vec<f64>>>> {
    let specs = cfg
        .methods
        .iter()
        .map(|&m| BoundSpec::new(m, cfg.delta))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let n = cfg.checkpoints.iter().copied().max().unwrap_or(0);
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let log = env.sample(n, derive_seed(cfg.seed, &[trial as u64]))?;
            let ys = iw_trace(&log, &env.target, false)?.values;
            let mut per_method = specs
                .iter()
                .map(|spec| {
                    cfg.checkpoints
                        .iter()
                        .map(|&t| Ok(lcb(&ys[..t], spec)?.lcb))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let mean_at = |t: usize, pow: i32| ys[..t].iter().map(|y| y.powi(pow)).sum::<f64>() / t as f64;
            per_method.push(cfg.checkpoints.iter().map(|&t| mean_at(t, 1)).collect());
            per_method.push(cfg.checkpoints.iter().map(|&t| mean_at(t, 4)).collect());
            Ok(per_method)
        })
        .collect()
}

/// Bound trajectories on importance-weighted rewards of the heavy-tail
/// environment: across-trial mean and 10%/90% quantiles at each checkpoint.
pub fn run_heavytail(cfg: &HeavyTailConfig, echo: BTreeMap<String, String>) -> Result<ExperimentReport> {
    check_delta(cfg.delta)?;
    if cfg.methods.is_empty() {
        return Err(config_err("heavytail needs at least one method"));
    }
    if cfg.checkpoints.is_empty() || cfg.checkpoints.contains(&0) {
        return Err(config_err("checkpoints must be positive and nonempty"));
    }
    let target = match &cfg.target {
        Some(p) => p.clone(),
        None => Policy::uniform(2)?,
    };
    let env = HeavyTailEnv::new(cfg.beta, target, DEFAULT_TRUNCATION)?;
    let dataset = format!("heavytail:{}", cfg.beta);
    let mut rows = vec![ReportRow::new("heavytail", "truth", &dataset, "mean", Some(env.target_value()?)).seed(cfg.seed)];
    if cfg.trials == 0 {
        return Ok(ExperimentReport::new("heavytail", echo, rows));
    }
    let results = heavytail_trials(&env, cfg)?;
    let mut names: Vec<String> = cfg.methods.iter().map(|m| m.to_string()).collect();
    names.push("sample-mean".into());
    for (mi, name) in names.iter().enumerate() {
        for (ci, &t) in cfg.checkpoints.iter().enumerate() {
            let vals: Vec<f64> = results.iter().map(|r| r[mi][ci]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let (q10, q90) = (quantile(&vals, 0.1), quantile(&vals, 0.9));
            for (metric, v) in [("mean", mean), ("q10", q10), ("q90", q90), ("band", q90 - q10)] {
                rows.push(ReportRow::new("heavytail", name, &dataset, &format!("{metric}@t={t}"), Some(v)).seed(cfg.seed));
            }
        }
    }
    let m4 = names.len();
    for (ci, &t) in cfg.checkpoints.iter().enumerate() {
        let v = results.iter().map(|r| r[m4][ci]).sum::<f64>() / results.len() as f64;
        rows.push(
            ReportRow::new("heavytail", "sample-mean", &dataset, &format!("fourth_moment@t={t}"), Some(v)).seed(cfg.seed),
        );
    }
    Ok(ExperimentReport::new("heavytail", echo, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_quantiles_equal_trajectory() {
        let cfg = HeavyTailConfig {
            methods: vec![BoundMethod::PCrp],
            checkpoints: vec![10, 50],
            trials: 1,
            ..HeavyTailConfig::default()
        };
        let rep = run_heavytail(&cfg, BTreeMap::new()).unwrap();
        for t in [10, 50] {
            let get = |m: &str| rep.find(&format!("{m}@t={t}"), Some("pcrp")).next().unwrap().value.unwrap();
            assert_eq!(get("q10"), get("mean"));
            assert_eq!(get("q90"), get("mean"));
        }
    }

    #[test]
    fn empty_methods_rejected() {
        let cfg = HeavyTailConfig { methods: vec![], ..HeavyTailConfig::default() };
        assert!(matches!(run_heavytail(&cfg, BTreeMap::new()), Err(super::super::ExperimentError::Config(_))));
    }
}
