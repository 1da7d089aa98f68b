use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::policy::{sample_from, softmax_in_place};
use super::{BanditError, LoggedInteraction, Policy, Result};

/// Multiclass dataset with dense features and labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationData {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl ClassificationData {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(BanditError::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = features.first() {
            if let Some(bad) = features.iter().find(|r| r.len() != first.len()) {
                return Err(BanditError::DimensionMismatch {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(BanditError::LabelOutOfRange { label, k: num_classes });
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    /// Infers the class count as `max label + 1`.
    pub fn from_rows(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        Self::new(features, labels, k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Rows at the given indices, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }
}

/// Per-feature centering and scaling fitted on one split and applied to
/// others; the transformed vector gets a trailing constant 1 for the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &ClassificationData) -> Self {
        let d = data.dim();
        let n = data.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in &data.features {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for row in &data.features {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = row
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        out.push(1.0);
        out
    }

    pub fn transform(&self, data: &ClassificationData) -> ClassificationData {
        ClassificationData {
            features: data.features.iter().map(|r| self.transform_row(r)).collect(),
            labels: data.labels.clone(),
            num_classes: data.num_classes,
        }
    }
}

/// Full-batch gradient descent settings for multinomial logistic regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the largest gradient entry falls below this.
    pub grad_tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            l2: 1e-4,
            max_iter: 2000,
            grad_tol: 1e-6,
        }
    }
}

/// Multinomial logistic regression weights (`K × d`) trained to convergence
/// from zero by full-batch gradient descent on the mean cross-entropy.
pub fn train_logistic(data: &ClassificationData, cfg: &LogisticConfig) -> Result<Vec<Vec<f64>>> {
    if data.is_empty() || data.num_classes == 0 {
        return Err(BanditError::InvalidPolicy("cannot train on an empty dataset".into()));
    }
    let (k, d) = (data.num_classes, data.dim());
    let n = data.len() as f64;
    let mut w = vec![vec![0.0; d]; k];
    let mut grad = vec![vec![0.0; d]; k];
    let mut p = vec![0.0; k];
    for _ in 0..cfg.max_iter {
        for (g, wr) in grad.iter_mut().zip(&w) {
            for (gv, wv) in g.iter_mut().zip(wr) {
                *gv = cfg.l2 * wv;
            }
        }
        for (x, &y) in data.features.iter().zip(&data.labels) {
            for (pa, wr) in p.iter_mut().zip(&w) {
                *pa = wr.iter().zip(x).map(|(a, b)| a * b).sum();
            }
            softmax_in_place(&mut p);
            p[y] -= 1.0;
            for (g, &pa) in grad.iter_mut().zip(&p) {
                for (gv, xv) in g.iter_mut().zip(x) {
                    *gv += pa * xv / n;
                }
            }
        }
        let gmax = grad.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax < cfg.grad_tol {
            break;
        }
        for (wr, g) in w.iter_mut().zip(&grad) {
            for (wv, gv) in wr.iter_mut().zip(g) {
                *wv -= cfg.learning_rate * gv;
            }
        }
    }
    Ok(w)
}

/// Weights whose argmax is one class past the original's, cyclically: row `c`
/// of the result is row `c - 1 (mod K)` of the input. Used to build a
/// deliberately wrong classifier from a trained one.
pub fn cycled_classifier(weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = weights.to_vec();
    out.rotate_right(1);
    out
}

/// Logs one bandit round per row: the behavior puts `1 - ε` on the
/// classifier's prediction and spreads `ε` uniformly; the reward is
/// `1{action = label}`, or `1 - cost[label][action]` when a cost matrix
/// with entries in `[0, 1]` is given.
pub fn bandit_from_classification(
    data: &ClassificationData,
    classifier: &Policy,
    epsilon: f64,
    seed: u64,
    cost: Option<&[Vec<f64>]>,
) -> Result<Vec<LoggedInteraction>> {
    let k = data.num_classes;
    if classifier.num_actions() != k {
        return Err(BanditError::DimensionMismatch {
            expected: k,
            got: classifier.num_actions(),
        });
    }
    if let Some(c) = cost {
        if c.len() != k || c.iter().any(|r| r.len() != k || r.iter().any(|v| !(0.0..=1.0).contains(v))) {
            return Err(BanditError::InvalidEnv(format!("cost matrix must be {k}x{k} with entries in [0, 1]")));
        }
    }
    let behavior = Policy::epsilon_mixture(classifier.clone(), epsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::with_capacity(data.len());
    for (x, &y) in data.features.iter().zip(&data.labels) {
        if y >= k {
            return Err(BanditError::LabelOutOfRange { label: y, k });
        }
        let probs = behavior.action_probs(x)?;
        let (a, p) = sample_from(&probs, &mut rng);
        let r = match cost {
            Some(c) => 1.0 - c[y][a],
            None => f64::from(u8::from(a == y)),
        };
        log.push(LoggedInteraction::new(x.clone(), a, r, p)?);
    }
    Ok(log)
}

/// Gaussian blobs: class centers drawn from `N(0, 2²)` per coordinate and
/// points scattered around them with unit variance.
pub fn synthetic_blobs(n: usize, dim: usize, classes: usize, seed: u64) -> Result<ClassificationData> {
    if dim == 0 || classes < 2 {
        return Err(BanditError::InvalidEnv("synthetic data needs dim >= 1 and at least two classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wide = Normal::new(0.0, 2.0).expect("valid normal");
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| wide.sample(&mut rng)).collect())
        .collect();
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random_range(0..classes);
        features.push(centers[y].iter().map(|c| c + unit.sample(&mut rng)).collect());
        labels.push(y);
    }
    ClassificationData::new(features, labels, classes)
}
