use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution as _, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_delta, config_err, derive_seed, ExperimentError, ExperimentReport, ReportRow, Result};
use crate::bandit::{iw_trace, HeavyTailEnv};
use crate::confidence::{lcb, BoundMethod, BoundSpec};

/// Known-mean data sources for coverage runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    Bernoulli { p: f64 },
    Gamma { shape: f64, scale: f64 },
    /// Importance-weighted rewards of the uniform target in the heavy-tail
    /// environment with behavior exponent `beta`.
    HeavyTail { beta: f64 },
    Constant { c: f64 },
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Bernoulli { p } => write!(f, "bernoulli:{p}"),
            Distribution::Gamma { shape, scale } => write!(f, "gamma:{shape}:{scale}"),
            Distribution::HeavyTail { beta } => write!(f, "heavytail:{beta}"),
            Distribution::Constant { c } => write!(f, "constant:{c}"),
        }
    }
}

impl FromStr for Distribution {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| config_err(format!("distribution {s:?} is missing a parameter")))?
                .parse()
                .map_err(|_| config_err(format!("bad parameter in distribution {s:?}")))
        };
        let d = match parts[0] {
            "bernoulli" => Distribution::Bernoulli { p: num(1)? },
            "gamma" => Distribution::Gamma {
                shape: num(1)?,
                scale: num(2)?,
            },
            "heavytail" => Distribution::HeavyTail {
                beta: if parts.len() > 1 { num(1)? } else { 3.0 },
            },
            "constant" => Distribution::Constant { c: num(1)? },
            other => return Err(config_err(format!("unknown distribution {other:?}"))),
        };
        d.validate()?;
        Ok(d)
    }
}

impl Distribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Distribution::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
            Distribution::HeavyTail { beta } => beta >= 1.0 && beta.is_finite(),
            Distribution::Constant { c } => c >= 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(config_err(format!("invalid distribution parameters: {self}")))
        }
    }
}

/// A distribution ready for sampling, with its mean computed once.
pub(crate) struct Source {
    dist: Distribution,
    env: Option<HeavyTailEnv>,
    pub(crate) mean: f64,
}

impl Source {
    pub(crate) fn new(dist: Distribution) -> Result<Self> {
        dist.validate()?;
        let (env, mean) = match dist {
            Distribution::Bernoulli { p } => (None, p),
            Distribution::Gamma { shape, scale } => (None, shape * scale),
            Distribution::HeavyTail { beta } => {
                let env = HeavyTailEnv::with_uniform_target(beta)?;
                let mean = env.target_value()?;
                (Some(env), mean)
            }
            Distribution::Constant { c } => (None, c),
        };
        Ok(Self { dist, env, mean })
    }

    pub(crate) fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match self.dist {
            Distribution::Bernoulli { p } => {
                let b = Bernoulli::new(p).map_err(|e| config_err(e.to_string()))?;
                (0..n).map(|_| f64::from(u8::from(b.sample(&mut rng)))).collect()
            }
            Distribution::Gamma { shape, scale } => {
                let g = Gamma::new(shape, scale).map_err(|e| config_err(e.to_string()))?;
                (0..n).map(|_| g.sample(&mut rng)).collect()
            }
            Distribution::HeavyTail { .. } => {
                let env = self.env.as_ref().expect("heavy-tail source has an environment");
                iw_trace(&env.sample(n, seed)?, &env.target, false)?.values
            }
            Distribution::Constant { c } => vec![c; n],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub distributions: Vec<Distribution>,
    pub methods: Vec<BoundMethod>,
    pub n: usize,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    /// Sample sizes at which the running variant is evaluated; `n` is always
    /// included. Empty disables the running variant.
    pub checkpoints: Vec<usize>,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            distributions: vec![
                Distribution::Bernoulli { p: 0.3 },
                Distribution::Gamma { shape: 6.0, scale: 0.125 },
                Distribution::HeavyTail { beta: 3.0 },
            ],
            methods: vec![
                BoundMethod::Up { prior: Default::default() },
                BoundMethod::PCrp,
                BoundMethod::Lbup { r: 1 },
                BoundMethod::Lbup { r: 2 },
                BoundMethod::EbRelax,
                BoundMethod::MaurerEb,
                BoundMethod::wswrkm(1.0),
            ],
            n: 500,
            trials: 1000,
            delta: 0.1,
            seed: 0,
            checkpoints: vec![50, 100, 200],
        }
    }
}

/// Per-trial LCBs for one distribution: `out[trial][method]` holds the bound at
/// the final sample size and the largest bound over the checkpoints.
pub(crate) fn coverage_trials(
    source: &Source,
    methods: &[BoundMethod],
    n: usize,
    trials: usize,
    delta: f64,
    seed: u64,
    checkpoints: &[usize],
) -> Result<Vec<Vec<(f64, f64)>>> {
    let specs = methods
        .iter()
        .map(|&m| BoundSpec::new(m, delta))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let ys = source.sample(n, derive_seed(seed, &[trial as u64]))?;
            specs
                .iter()
                .map(|spec| {
                    let last = lcb(&ys, spec)?.lcb;
                    let mut running = last;
                    for &t in checkpoints.iter().filter(|&&t| t >= 1 && t < n) {
                        running = running.max(lcb(&ys[..t], spec)?.lcb);
                    }
                    Ok((last, running))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Violation frequencies of `mean ≥ lcb` for every (distribution, method)
/// cell, at the final sample size and for the running maximum of the bound
/// over the checkpoints (the intersection of the confidence sets).
pub fn run_coverage(cfg: &CoverageConfig, echo: BTreeMap<String, String>) -> Result<ExperimentReport> {
    check_delta(cfg.delta)?;
    if cfg.methods.is_empty() || cfg.distributions.is_empty() {
        return Err(config_err("coverage needs at least one method and one distribution"));
    }
    if cfg.n == 0 {
        return Err(config_err("n must be positive"));
    }
    let mut rows = Vec::new();
    if cfg.trials == 0 {
        return Ok(ExperimentReport::new("coverage", echo, rows));
    }
    for (di, &dist) in cfg.distributions.iter().enumerate() {
        let source = Source::new(dist)?;
        let results = coverage_trials(
            &source,
            &cfg.methods,
            cfg.n,
            cfg.trials,
            cfg.delta,
            derive_seed(cfg.seed, &[di as u64]),
            &cfg.checkpoints,
        )?;
        let name = dist.to_string();
        let nt = cfg.trials as f64;
        rows.push(ReportRow::new("coverage", "truth", &name, "mean", Some(source.mean)).seed(cfg.seed));
        for (mi, m) in cfg.methods.iter().enumerate() {
            let method = m.to_string();
            let cell = |metric: &str, v: f64| ReportRow::new("coverage", &method, &name, metric, Some(v)).seed(cfg.seed);
            let final_viol = results.iter().filter(|r| r[mi].0 > source.mean).count() as f64 / nt;
            let mean_lcb = results.iter().map(|r| r[mi].0).sum::<f64>() / nt;
            rows.push(cell("violation_rate_final", final_viol));
            rows.push(cell("mean_lcb", mean_lcb));
            if !cfg.checkpoints.is_empty() {
                let run_viol = results.iter().filter(|r| r[mi].1 > source.mean).count() as f64 / nt;
                rows.push(cell("violation_rate_running", run_viol));
            }
        }
    }
    Ok(ExperimentReport::new("coverage", echo, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_distributions() {
        assert_eq!("bernoulli:0.3".parse::<Distribution>().unwrap(), Distribution::Bernoulli { p: 0.3 });
        assert_eq!(
            "gamma:6:0.125".parse::<Distribution>().unwrap(),
            Distribution::Gamma { shape: 6.0, scale: 0.125 }
        );
        assert_eq!("heavytail".parse::<Distribution>().unwrap(), Distribution::HeavyTail { beta: 3.0 });
        assert!("bernoulli:2".parse::<Distribution>().is_err());
        assert!("cauchy:1".parse::<Distribution>().is_err());
        for d in CoverageConfig::default().distributions {
            assert_eq!(d.to_string().parse::<Distribution>().unwrap(), d);
        }
    }

    #[test]
    fn constant_zero_never_violates() {
        let cfg = CoverageConfig {
            distributions: vec![Distribution::Constant { c: 0.0 }],
            methods: vec![BoundMethod::PCrp, BoundMethod::MaurerEb],
            n: 50,
            trials: 20,
            checkpoints: vec![10, 25],
            ..CoverageConfig::default()
        };
        let rep = run_coverage(&cfg, BTreeMap::new()).unwrap();
        for r in rep.find("violation_rate_final", None).chain(rep.find("violation_rate_running", None)) {
            assert_eq!(r.value, Some(0.0));
        }
        for r in rep.find("mean_lcb", None) {
            assert_eq!(r.value, Some(0.0));
        }
    }

    #[test]
    fn zero_trials_is_empty() {
        let cfg = CoverageConfig { trials: 0, ..CoverageConfig::default() };
        assert!(run_coverage(&cfg, BTreeMap::new()).unwrap().rows.is_empty());
    }

    #[test]
    fn gamma_mean() {
        let s = Source::new(Distribution::Gamma { shape: 6.0, scale: 0.125 }).unwrap();
        assert_eq!(s.mean, 0.75);
        let ys = s.sample(20_000, 3).unwrap();
        let m = ys.iter().sum::<f64>() / ys.len() as f64;
        // sd of the mean is sqrt(6)/8/sqrt(20000)
        assert!((m - 0.75).abs() < 3.0 * 6f64.sqrt() / 8.0 / 20_000f64.sqrt());
    }
}
