//! Pessimistic off-policy selection: score every candidate by a lower
//! confidence bound on its importance-weighted rewards and keep the best.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{iw_estimate, iw_trace, BanditError, LoggedInteraction, Policy};
use crate::confidence::{lcb, BoundMethod, BoundSpec, ConfidenceError};

/// LCBs closer than this to the best one count as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("no candidate policies")]
    NoCandidates,
    #[error("empty log")]
    EmptyLog,
    #[error("duplicate candidate name {0:?}")]
    DuplicateName(String),
    #[error("unknown policy {0:?}")]
    UnknownPolicy(String),
    #[error("baseline value is zero")]
    ZeroBaseline,
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
}

pub type Result<T> = std::result::Result<T, SelectionError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTask {
    pub log: Vec<LoggedInteraction>,
    pub candidates: Vec<(String, Policy)>,
    pub spec: BoundSpec,
}

impl SelectionTask {
    pub fn new(log: Vec<LoggedInteraction>, candidates: Vec<(String, Policy)>, spec: BoundSpec) -> Result<Self> {
        if candidates.is_empty() {
            return Err(SelectionError::NoCandidates);
        }
        if log.is_empty() {
            return Err(SelectionError::EmptyLog);
        }
        let mut seen = BTreeSet::new();
        for (name, _) in &candidates {
            if !seen.insert(name.as_str()) {
                return Err(SelectionError::DuplicateName(name.clone()));
            }
        }
        Ok(Self { log, candidates, spec })
    }

    pub fn per_policy_level(&self) -> f64 {
        self.spec.delta / self.candidates.len() as f64
    }

    /// Same task scored by another bound method at the same `δ`.
    pub fn with_method(&self, method: BoundMethod) -> Result<Self> {
        Ok(Self {
            spec: BoundSpec::new(method, self.spec.delta)?,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub chosen: String,
    pub lcbs: BTreeMap<String, f64>,
    pub per_policy_level: f64,
    /// Candidates within [`TIE_TOL`] of the best score, in name order.
    pub ties: Vec<String>,
}

/// Highest score wins; among ties the lexicographically smallest name.
fn argmax_outcome(scores: BTreeMap<String, f64>, per_policy_level: f64) -> SelectionOutcome {
    let best = scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<String> = scores
        .iter()
        .filter(|(_, &v)| v >= best - TIE_TOL)
        .map(|(k, _)| k.clone())
        .collect();
    SelectionOutcome {
        chosen: ties[0].clone(),
        lcbs: scores,
        per_policy_level,
        ties,
    }
}

/// Scores every candidate by its LCB at level `δ/|Π|` and returns the argmax.
pub fn pub_select(task: &SelectionTask) -> Result<SelectionOutcome> {
    let spec = task.spec.split(task.candidates.len())?;
    let scores = task
        .candidates
        .par_iter()
        .map(|(name, pi)| {
            let trace = iw_trace(&task.log, pi, false)?;
            Ok((name.clone(), lcb(&trace.values, &spec)?.lcb))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(argmax_outcome(scores, spec.delta))
}

/// Picks the candidate with the highest importance-weighted estimate, with no
/// pessimism; the reported level is 1.
pub fn iw_select(task: &SelectionTask) -> Result<SelectionOutcome> {
    let scores = task
        .candidates
        .iter()
        .map(|(name, pi)| Ok((name.clone(), iw_estimate(&iw_trace(&task.log, pi, false)?)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(argmax_outcome(scores, 1.0))
}

/// One selector's outcome, optionally scored against a baseline policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorResult {
    pub method: String,
    pub outcome: SelectionOutcome,
    pub chosen_value: Option<f64>,
    pub relative_improvement: Option<f64>,
}

/// Values used to score selections: `values[name]` is the (true or
/// held-out) value of each candidate and `baseline` names the reference.
#[derive(Debug, Clone, Copy)]
pub struct Scoring<'a> {
    pub values: &'a BTreeMap<String, f64>,
    pub baseline: &'a str,
}

/// Runs PUB selection once per bound method on the same task.
pub fn compare_selectors(
    task: &SelectionTask,
    methods: &[BoundMethod],
    scoring: Option<Scoring<'_>>,
) -> Result<Vec<SelectorResult>> {
    methods
        .iter()
        .map(|&m| {
            let outcome = pub_select(&task.with_method(m)?)?;
            score_outcome(m.to_string(), outcome, scoring)
        })
        .collect()
}

pub fn score_outcome(method: String, outcome: SelectionOutcome, scoring: Option<Scoring<'_>>) -> Result<SelectorResult> {
    let (chosen_value, relative_improvement) = match scoring {
        Some(s) => {
            let value = |name: &str| {
                s.values
                    .get(name)
                    .copied()
                    .ok_or_else(|| SelectionError::UnknownPolicy(name.to_string()))
            };
            let v = value(&outcome.chosen)?;
            (Some(v), Some(relative_improvement(v, value(s.baseline)?)?))
        }
        None => (None, None),
    };
    Ok(SelectorResult {
        method,
        outcome,
        chosen_value,
        relative_improvement,
    })
}

/// `(target - baseline) / |baseline|`, positive when the target has the
/// higher reward.
pub fn relative_improvement(value_target: f64, value_baseline: f64) -> Result<f64> {
    if value_baseline == 0.0 {
        return Err(SelectionError::ZeroBaseline);
    }
    Ok((value_target - value_baseline) / value_baseline.abs())
}
