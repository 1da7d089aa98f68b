use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_delta, config_err, derive_seed, ExperimentError, ExperimentReport, ReportRow, Result};
use crate::bandit::io::{read_classification, save_policy, write_log};
use crate::bandit::{
    bandit_from_classification, cycled_classifier, iw_estimate, iw_trace, synthetic_blobs, train_logistic,
    ClassificationData, LoggedInteraction, LogisticConfig, Policy, Standardizer,
};
use crate::confidence::{BoundMethod, BoundSpec};
use crate::learning::{train_policy, Family, Objective, TrainConfig};
use crate::selection::{pub_select, relative_improvement, SelectionTask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DatasetSource {
    /// Delimited file with `feature_*` columns and a `label` column.
    File(PathBuf),
    /// Gaussian blobs generated from the run seed.
    Synthetic { n: usize, dim: usize, classes: usize },
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            DatasetSource::Synthetic { n, dim, classes } => format!("synthetic-{n}-{dim}-{classes}"),
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::File(p) => write!(f, "{}", p.display()),
            DatasetSource::Synthetic { n, dim, classes } => write!(f, "synthetic:{n}:{dim}:{classes}"),
        }
    }
}

impl FromStr for DatasetSource {
    type Err = ExperimentError;

    /// `synthetic[:n:d:k]` or a file path.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "synthetic" {
            return Ok(DatasetSource::Synthetic { n: 3000, dim: 5, classes: 4 });
        }
        if let Some(rest) = s.strip_prefix("synthetic:") {
            let v: Vec<usize> = rest
                .split(':')
                .map(|p| p.parse().map_err(|_| config_err(format!("bad synthetic dataset {s:?}"))))
                .collect::<Result<_>>()?;
            if v.len() != 3 || v[0] == 0 || v[1] == 0 || v[2] < 2 {
                return Err(config_err(format!("synthetic dataset must be synthetic:n:d:k, got {s:?}")));
            }
            return Ok(DatasetSource::Synthetic { n: v[0], dim: v[1], classes: v[2] });
        }
        Ok(DatasetSource::File(PathBuf::from(s)))
    }
}

pub fn load_dataset(src: &DatasetSource, seed: u64) -> Result<ClassificationData> {
    Ok(match src {
        DatasetSource::File(p) => read_classification(p)
            .map_err(|e| ExperimentError::Data(format!("{}: {e}", p.display())))?,
        DatasetSource::Synthetic { n, dim, classes } => synthetic_blobs(*n, *dim, *classes, seed)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BehaviorKind {
    Good,
    Bad,
}

impl FromStr for BehaviorKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "good" => Ok(BehaviorKind::Good),
            "bad" => Ok(BehaviorKind::Bad),
            other => Err(config_err(format!("behavior must be good or bad, got {other:?}"))),
        }
    }
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BehaviorKind::Good => "good",
            BehaviorKind::Bad => "bad",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub datasets: Vec<DatasetSource>,
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub delta: f64,
    /// Rows kept from each dataset after a seeded shuffle.
    pub max_rows: usize,
    pub epsilon: f64,
    pub behavior: BehaviorKind,
    pub betas: Vec<f64>,
    pub families: Vec<Family>,
    pub train: TrainConfig,
    /// Seed for the dataset shuffle and the behavior classifier.
    pub data_seed: u64,
    /// Optional `K × K` cost matrix in `[0, 1]`; rewards become `1 - cost`.
    pub cost: Option<Vec<Vec<f64>>>,
    /// Where trained policies and logs are written for `select`.
    pub pool_dir: Option<PathBuf>,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            datasets: vec![DatasetSource::Synthetic { n: 3000, dim: 5, classes: 4 }],
            fractions: vec![0.01, 0.1, 1.0],
            seeds: (0..20).collect(),
            delta: 0.1,
            max_rows: 10_000,
            epsilon: 0.1,
            behavior: BehaviorKind::Good,
            betas: vec![0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0],
            families: Family::ALL.to_vec(),
            train: TrainConfig::default(),
            data_seed: 0,
            cost: None,
            pool_dir: None,
        }
    }
}

/// Everything derived from one dataset that every (fraction, seed) cell shares.
struct Prepared {
    name: String,
    classifier: Policy,
    behavior: Policy,
    /// Standardised rows not used for the classifier, split in thirds per seed.
    pool: ClassificationData,
}

fn prepare(src: &DatasetSource, cfg: &LearnConfig) -> Result<Prepared> {
    let raw = load_dataset(src, cfg.data_seed)?;
    if raw.num_classes < 2 {
        return Err(ExperimentError::Data(format!("{}: need at least two classes", src.name())));
    }
    let mut idx: Vec<usize> = (0..raw.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.data_seed, &[0])));
    idx.truncate(cfg.max_rows);
    let n_clf = idx.len() / 5;
    if n_clf < 2 || idx.len() - n_clf < 6 {
        return Err(ExperimentError::Data(format!("{}: too few rows ({})", src.name(), raw.len())));
    }
    let clf_raw = raw.subset(&idx[..n_clf]);
    let standardizer = Standardizer::fit(&clf_raw);
    let weights = train_logistic(&standardizer.transform(&clf_raw), &LogisticConfig::default())?;
    let weights = match cfg.behavior {
        BehaviorKind::Good => weights,
        BehaviorKind::Bad => cycled_classifier(&weights),
    };
    let classifier = Policy::deterministic(weights)?;
    let behavior = Policy::epsilon_mixture(classifier.clone(), cfg.epsilon)?;
    let mut name = src.name();
    if cfg.cost.is_some() {
        name.push_str("+cost-standin");
    }
    Ok(Prepared {
        name,
        classifier,
        behavior,
        pool: standardizer.transform(&raw.subset(&idx[n_clf..])),
    })
}

/// Training, selection and test logs of one cell.
pub(crate) struct CellLogs {
    pub train: Vec<LoggedInteraction>,
    pub select: Vec<LoggedInteraction>,
    pub test: Vec<LoggedInteraction>,
}

fn cell_logs(p: &Prepared, cfg: &LearnConfig, fraction: f64, seed: u64) -> Result<CellLogs> {
    let mut idx: Vec<usize> = (0..p.pool.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.data_seed, &[1, seed])));
    let third = idx.len() / 3;
    let n = ((fraction * third as f64).round() as usize).clamp(2.min(third), third);
    let log = |rows: &[usize], tag: u64| {
        bandit_from_classification(
            &p.pool.subset(rows),
            &p.classifier,
            cfg.epsilon,
            derive_seed(cfg.data_seed, &[2, seed, tag]),
            cfg.cost.as_deref(),
        )
    };
    Ok(CellLogs {
        train: log(&idx[..n], 0)?,
        select: log(&idx[third..third + n], 1)?,
        test: log(&idx[2 * third..], 2)?,
    })
}

fn family_betas(family: Family, grid: &[f64]) -> Vec<f64> {
    match family {
        Family::Iw | Family::Naive => vec![0.0],
        Family::ClippedIw => grid.iter().copied().filter(|&b| b > 0.0 && b <= 1.0).collect(),
        _ => grid.to_vec(),
    }
}

struct FamilyResult {
    beta: f64,
    policy: Policy,
}

/// Picks `β` by PUB on a 50/50 split of the training log, then retrains on
/// the whole log with that `β`.
fn fit_family(
    family: Family,
    logs: &CellLogs,
    num_actions: usize,
    behavior: &Policy,
    cfg: &LearnConfig,
    seed: u64,
) -> Result<FamilyResult> {
    let betas = family_betas(family, &cfg.betas);
    if betas.is_empty() {
        return Err(config_err(format!("no admissible beta for {family}")));
    }
    let train_cfg = TrainConfig { seed: derive_seed(seed, &[3]), ..cfg.train };
    let beta = if betas.len() == 1 {
        betas[0]
    } else {
        let half = logs.train.len() / 2;
        let (a, b) = logs.train.split_at(half.max(1));
        let b = if b.is_empty() { a } else { b };
        let candidates = betas
            .iter()
            .map(|&beta| {
                let obj = Objective::new(family, beta)?;
                let t = train_policy(&obj, a, num_actions, Some(behavior), &train_cfg)?;
                Ok((format!("{beta:e}"), t.deterministic))
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = BoundSpec::new(BoundMethod::PCrp, cfg.delta)?;
        let out = pub_select(&SelectionTask::new(b.to_vec(), candidates, spec)?)?;
        out.chosen.parse().expect("candidate names are formatted betas")
    };
    let obj = Objective::new(family, beta)?;
    let t = train_policy(&obj, &logs.train, num_actions, Some(behavior), &train_cfg)?;
    Ok(FamilyResult {
        beta,
        policy: t.deterministic,
    })
}

pub(crate) fn cell_dir(root: &Path, dataset: &str, fraction: f64, seed: u64) -> PathBuf {
    root.join("pool").join(dataset).join(format!("f{fraction:?}")).join(format!("s{seed}"))
}

/// Trains every objective family per (dataset, fraction, seed), tunes `β` by
/// PUB and reports held-out IW values and relative improvement over IW.
pub fn run_learn(cfg: &LearnConfig, echo: BTreeMap<String, String>) -> Result<ExperimentReport> {
    check_delta(cfg.delta)?;
    cfg.train.validate()?;
    if cfg.datasets.is_empty() || cfg.families.is_empty() || cfg.fractions.is_empty() {
        return Err(config_err("learn needs datasets, families and fractions"));
    }
    if cfg.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(config_err("fractions must lie in (0, 1]"));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0) {
        return Err(config_err(format!("epsilon must lie in (0, 1], got {}", cfg.epsilon)));
    }
    let mut rows = Vec::new();
    for src in &cfg.datasets {
        let prep = prepare(src, cfg)?;
        let k = prep.classifier.num_actions();
        let cells: Vec<(f64, u64)> = cfg
            .fractions
            .iter()
            .flat_map(|&f| cfg.seeds.iter().map(move |&s| (f, s)))
            .collect();
        let results = cells
            .par_iter()
            .map(|&(fraction, seed)| -> Result<Vec<ReportRow>> {
                let logs = cell_logs(&prep, cfg, fraction, seed)?;
                let fitted = cfg
                    .families
                    .iter()
                    .map(|&f| Ok((f, fit_family(f, &logs, k, &prep.behavior, cfg, seed)?)))
                    .collect::<Result<Vec<_>>>()?;
                let value = |p: &Policy| -> Result<f64> { Ok(iw_estimate(&iw_trace(&logs.test, p, false)?)?) };
                let iw_value = match fitted.iter().find(|(f, _)| *f == Family::Iw) {
                    Some((_, r)) => value(&r.policy)?,
                    None => {
                        let obj = Objective::new(Family::Iw, 0.0)?;
                        let tc = TrainConfig { seed: derive_seed(seed, &[3]), ..cfg.train };
                        value(&train_policy(&obj, &logs.train, k, None, &tc)?.deterministic)?
                    }
                };
                if let Some(root) = &cfg.pool_dir {
                    let dir = cell_dir(root, &prep.name, fraction, seed);
                    fs::create_dir_all(&dir)?;
                    write_log(&dir.join("selection.csv"), &logs.select)?;
                    write_log(&dir.join("test.csv"), &logs.test)?;
                    for (f, r) in &fitted {
                        save_policy(&dir.join(format!("{f}.policy")), &r.policy)?;
                    }
                }
                let mut out = Vec::new();
                for (f, r) in &fitted {
                    let v = value(&r.policy)?;
                    let row = |metric: &str, x: Option<f64>| {
                        ReportRow::new("learn", &f.to_string(), &prep.name, metric, x)
                            .fraction(fraction)
                            .seed(seed)
                    };
                    out.push(row("value", Some(v)));
                    out.push(row("beta", Some(r.beta)));
                    out.push(row("relative_improvement", relative_improvement(v, iw_value).ok()));
                    out.push(row("n_train", Some(logs.train.len() as f64)));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(results.into_iter().flatten());
    }
    Ok(ExperimentReport::new("learn", echo, rows))
}
