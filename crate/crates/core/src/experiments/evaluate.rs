use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{check_delta, ExperimentError, ExperimentReport, ReportRow, Result};
use crate::bandit::io::{load_policy, read_log};
use crate::bandit::{iw_estimate, iw_trace};
use crate::confidence::{evaluate_policy_interval, BoundMethod, BoundSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub log: PathBuf,
    pub policy: PathBuf,
    pub method: BoundMethod,
    pub delta: f64,
}

/// Two-sided interval for one policy on one logged dataset with rewards in
/// `[0, 1]`; each side holds at level `δ`, jointly at `1 - 2δ`.
pub fn run_evaluate(cfg: &EvaluateConfig, echo: BTreeMap<String, String>) -> Result<ExperimentReport> {
    check_delta(cfg.delta)?;
    let log = read_log(&cfg.log).map_err(|e| ExperimentError::Data(format!("{}: {e}", cfg.log.display())))?;
    let pi = load_policy(&cfg.policy).map_err(|e| ExperimentError::Data(format!("{}: {e}", cfg.policy.display())))?;
    let interval = evaluate_policy_interval(&log, &pi, &BoundSpec::new(cfg.method, cfg.delta)?)?;
    let iw = iw_estimate(&iw_trace(&log, &pi, false)?)?;
    let dataset = cfg
        .log
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "log".into());
    let method = cfg.method.to_string();
    let row = |metric: &str, v: f64| ReportRow::new("evaluate", &method, &dataset, metric, Some(v));
    let rows = vec![
        row("lcb", interval.lcb),
        row("ucb", interval.ucb),
        row("iw_estimate", iw),
        row("n", log.len() as f64),
    ];
    Ok(ExperimentReport::new("evaluate", echo, rows))
}
