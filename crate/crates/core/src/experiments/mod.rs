//! Desk-scale experiment drivers behind the `opbet` subcommands. Every
//! driver is a pure function of its configuration and input files and returns
//! an [`ExperimentReport`] whose rows are kept in canonical key order.

mod coverage;
mod evaluate;
mod heavytail;
mod learn;
mod select;

pub use coverage::{run_coverage, CoverageConfig, Distribution};
pub use evaluate::{run_evaluate, EvaluateConfig};
pub use heavytail::{run_heavytail, HeavyTailConfig};
pub use learn::{load_dataset, run_learn, BehaviorKind, DatasetSource, LearnConfig};
pub use select::{run_select, SelectConfig, Selector};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::{Data, OrderStatistics};
use thiserror::Error;

use crate::bandit::BanditError;
use crate::confidence::ConfidenceError;
use crate::learning::LearningError;
use crate::selection::SelectionError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl ExperimentError {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Data(_) => 3,
            ExperimentError::Numeric(_) => 4,
        }
    }
}

impl From<BanditError> for ExperimentError {
    fn from(e: BanditError) -> Self {
        ExperimentError::Data(e.to_string())
    }
}

impl From<ConfidenceError> for ExperimentError {
    fn from(e: ConfidenceError) -> Self {
        match e {
            ConfidenceError::RewardOutOfRange(_) | ConfidenceError::PropensityOutOfRange(_) => {
                ExperimentError::Data(e.to_string())
            }
            ConfidenceError::InvalidDelta(_) | ConfidenceError::InvalidHyper(_) | ConfidenceError::UnknownMethod(_) => {
                ExperimentError::Config(e.to_string())
            }
            _ => ExperimentError::Numeric(e.to_string()),
        }
    }
}

impl From<LearningError> for ExperimentError {
    fn from(e: LearningError) -> Self {
        match e {
            LearningError::Bandit(b) => b.into(),
            LearningError::BetaOutOfRange { .. } | LearningError::InvalidConfig(_) | LearningError::UnknownObjective(_) => {
                ExperimentError::Config(e.to_string())
            }
            _ => ExperimentError::Numeric(e.to_string()),
        }
    }
}

impl From<SelectionError> for ExperimentError {
    fn from(e: SelectionError) -> Self {
        match e {
            SelectionError::Bandit(b) => b.into(),
            SelectionError::Confidence(c) => c.into(),
            other => ExperimentError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Column names of every report, in order.
pub const REPORT_COLUMNS: [&str; 7] = ["experiment", "method", "dataset", "fraction", "seed", "metric", "value"];

/// One report cell. Missing `fraction`, `seed` or `value` are written as
/// empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub method: String,
    pub dataset: String,
    pub fraction: Option<f64>,
    pub seed: Option<u64>,
    pub metric: String,
    pub value: Option<f64>,
}

impl ReportRow {
    pub fn new(experiment: &str, method: &str, dataset: &str, metric: &str, value: Option<f64>) -> Self {
        Self {
            experiment: experiment.into(),
            method: method.into(),
            dataset: dataset.into(),
            fraction: None,
            seed: None,
            metric: metric.into(),
            value,
        }
    }

    pub fn fraction(mut self, f: f64) -> Self {
        self.fraction = Some(f);
        self
    }

    pub fn seed(mut self, s: u64) -> Self {
        self.seed = Some(s);
        self
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        let frac = |f: Option<f64>, g: Option<f64>| match (f, g) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (a, b) => a.is_some().cmp(&b.is_some()),
        };
        self.experiment
            .cmp(&other.experiment)
            .then_with(|| self.dataset.cmp(&other.dataset))
            .then_with(|| self.method.cmp(&other.method))
            .then_with(|| frac(self.fraction, other.fraction))
            .then_with(|| self.seed.cmp(&other.seed))
            .then_with(|| self.metric.cmp(&other.metric))
    }
}

/// Configuration echo and code version written next to the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    pub columns: Vec<String>,
    pub config: BTreeMap<String, String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub manifest: Manifest,
}

impl ExperimentReport {
    /// Sorts rows into canonical key order.
    pub fn new(subcommand: &str, config: BTreeMap<String, String>, mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(ReportRow::key_cmp);
        Self {
            manifest: Manifest {
                subcommand: subcommand.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                columns: REPORT_COLUMNS.iter().map(|c| c.to_string()).collect(),
                config,
                rows: rows.len(),
            },
            rows,
        }
    }

    /// Rows matching a metric name and, optionally, a method.
    pub fn find<'a>(&'a self, metric: &'a str, method: Option<&'a str>) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.metric == metric && method.is_none_or(|m| r.method == m))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.rows)
    }

    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.manifest).expect("manifest serialises") + "\n"
    }
}

fn fmt_opt<T: fmt::Debug>(v: Option<T>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn write_rows<W: Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let data_err = |e: csv::Error| ExperimentError::Data(e.to_string());
    wtr.write_record(REPORT_COLUMNS).map_err(data_err)?;
    for r in rows {
        wtr.write_record([
            r.experiment.clone(),
            r.method.clone(),
            r.dataset.clone(),
            fmt_opt(r.fraction),
            fmt_opt(r.seed),
            r.metric.clone(),
            fmt_opt(r.value),
        ])
        .map_err(data_err)?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(s: &str, line: usize, col: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| ExperimentError::Data(format!("line {line}: bad {col} {s:?}")))
}

pub fn read_report_csv<R: Read>(r: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| ExperimentError::Data(e.to_string()))?;
    if header.iter().ne(REPORT_COLUMNS) {
        return Err(ExperimentError::Data(format!("report header must be {}", REPORT_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ExperimentError::Data(e.to_string()))?;
        let line = i + 2;
        if rec.len() != REPORT_COLUMNS.len() {
            return Err(ExperimentError::Data(format!("line {line}: expected 7 fields")));
        }
        rows.push(ReportRow {
            experiment: rec[0].into(),
            method: rec[1].into(),
            dataset: rec[2].into(),
            fraction: parse_opt(&rec[3], line, "fraction")?,
            seed: parse_opt(&rec[4], line, "seed")?,
            metric: rec[5].into(),
            value: parse_opt(&rec[6], line, "value")?,
        });
    }
    Ok(rows)
}

/// Re-verifies the row invariants of a written report and lists every
/// problem found.
pub fn check_rows(rows: &[ReportRow]) -> Vec<String> {
    let mut problems = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let line = i + 2;
        if r.experiment.is_empty() || r.method.is_empty() || r.dataset.is_empty() || r.metric.is_empty() {
            problems.push(format!("line {line}: empty key field"));
        }
        if let Some(f) = r.fraction {
            if !(f > 0.0 && f <= 1.0) {
                problems.push(format!("line {line}: fraction {f} outside (0, 1]"));
            }
        }
        if let Some(v) = r.value {
            if !v.is_finite() {
                problems.push(format!("line {line}: non-finite value"));
            }
            let unit = r.metric.starts_with("violation_rate")
                || r.metric.starts_with("exceed")
                || r.metric == "p_value"
                || r.metric == "best"
                || r.metric == "indistinguishable_from_best";
            if unit && !(0.0..=1.0).contains(&v) {
                problems.push(format!("line {line}: {} = {v} outside [0, 1]", r.metric));
            }
        }
        if i > 0 && rows[i - 1].key_cmp(r) != Ordering::Less {
            problems.push(format!("line {line}: rows out of canonical order or duplicated key"));
        }
    }
    problems
}

/// Two-sided one-sample t-test of `mean(d) = 0`. Returns `None` for fewer
/// than two differences; all-zero differences give `t = 0, p = 1`.
pub fn paired_t_test(diffs: &[f64]) -> Option<(f64, f64)> {
    let n = diffs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return Some(if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        });
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("positive degrees of freedom");
    Some((t, 2.0 * dist.sf(t.abs())))
}

/// Empirical quantile of a nonempty sample.
pub fn quantile(values: &[f64], tau: f64) -> f64 {
    Data::new(values.to_vec()).quantile(tau)
}

/// Independent child seed for the path `parts` under `base`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(base, |s, &p| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        rng.set_stream(p.wrapping_add(1));
        rng.next_u64()
    })
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(config_err(format!("delta must lie in (0, 1), got {delta}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, seed: Option<u64>, metric: &str, v: f64) -> ReportRow {
        let mut r = ReportRow::new("x", method, "d", metric, Some(v));
        r.seed = seed;
        r
    }

    #[test]
    fn rows_sorted_and_roundtrip() {
        let rep = ExperimentReport::new(
            "x",
            BTreeMap::new(),
            vec![row("b", Some(1), "m", 0.5), row("a", Some(2), "m", 1e-300), row("a", None, "m", 0.25)],
        );
        assert_eq!(rep.rows[0].seed, None);
        assert_eq!(rep.rows[2].method, "b");
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let back = read_report_csv(&buf[..]).unwrap();
        assert_eq!(back, rep.rows);
        assert!(check_rows(&back).is_empty());
    }

    #[test]
    fn check_flags_problems() {
        let rows = vec![row("a", None, "violation_rate_final", 1.5), row("a", None, "violation_rate_final", 0.1)];
        let p = check_rows(&rows);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn t_test_conventions() {
        assert_eq!(paired_t_test(&[0.3]), None);
        assert_eq!(paired_t_test(&[0.0, 0.0, 0.0]), Some((0.0, 1.0)));
        let (t, p) = paired_t_test(&[1.0, 1.0]).unwrap();
        assert!(t.is_infinite() && p == 0.0);
    }

    #[test]
    fn seeds_differ_by_path() {
        let a = derive_seed(1, &[0, 1]);
        assert_eq!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 1]));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ExperimentError::Config(String::new()).exit_code(), 2);
        assert_eq!(ExperimentError::Data(String::new()).exit_code(), 3);
        assert_eq!(ExperimentError::Numeric(String::new()).exit_code(), 4);
    }
}
