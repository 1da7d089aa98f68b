use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_delta, config_err, paired_t_test, ExperimentError, ExperimentReport, ReportRow, Result};
use crate::bandit::io::{load_policy, read_log};
use crate::bandit::{iw_estimate, iw_trace, Policy};
use crate::confidence::{BoundMethod, BoundSpec};
use crate::selection::{iw_select, pub_select, relative_improvement, SelectionTask};

/// Significance level below which a selector is distinguishable from the best.
const INDISTINGUISHABLE_P: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    /// Highest importance-weighted estimate.
    Iw,
    /// Pessimistic selection with the given bound.
    Bound(BoundMethod),
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Iw => f.write_str("iw"),
            Selector::Bound(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for Selector {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "iw" => Ok(Selector::Iw),
            other => Ok(Selector::Bound(other.parse::<BoundMethod>()?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    /// Output directory of a previous `learn` run (containing `pool/`).
    pub pool: PathBuf,
    pub selectors: Vec<Selector>,
    pub delta: f64,
    /// Restrict to these datasets; all when empty.
    pub datasets: Vec<String>,
    /// Restrict to these fractions; all when empty.
    pub fractions: Vec<f64>,
    /// Restrict to these seeds; all when empty.
    pub seeds: Vec<u64>,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            pool: PathBuf::from("out"),
            selectors: vec![
                Selector::Iw,
                Selector::Bound(BoundMethod::PCrp),
                Selector::Bound(BoundMethod::MaurerEb),
                Selector::Bound(BoundMethod::wswrkm(1.0)),
            ],
            delta: 0.1,
            datasets: vec![],
            fractions: vec![],
            seeds: vec![],
        }
    }
}

/// One `(dataset, fraction, seed)` directory of the pool.
struct Cell {
    dataset: String,
    fraction: f64,
    seed: u64,
    dir: PathBuf,
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| ExperimentError::Data(format!("{}: {e}", dir.display())))? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

fn scan_pool(cfg: &SelectConfig) -> Result<Vec<Cell>> {
    let root = cfg.pool.join("pool");
    let mut cells = Vec::new();
    for (dataset, ddir) in sorted_subdirs(&root)? {
        if !cfg.datasets.is_empty() && !cfg.datasets.contains(&dataset) {
            continue;
        }
        for (fname, fdir) in sorted_subdirs(&ddir)? {
            let Some(fraction) = fname.strip_prefix('f').and_then(|f| f.parse::<f64>().ok()) else {
                continue;
            };
            if !cfg.fractions.is_empty() && !cfg.fractions.contains(&fraction) {
                continue;
            }
            for (sname, sdir) in sorted_subdirs(&fdir)? {
                let Some(seed) = sname.strip_prefix('s').and_then(|s| s.parse::<u64>().ok()) else {
                    continue;
                };
                if !cfg.seeds.is_empty() && !cfg.seeds.contains(&seed) {
                    continue;
                }
                cells.push(Cell {
                    dataset: dataset.clone(),
                    fraction,
                    seed,
                    dir: sdir,
                });
            }
        }
    }
    if cells.is_empty() {
        return Err(ExperimentError::Data(format!("no policy pool under {}", root.display())));
    }
    Ok(cells)
}

fn load_candidates(dir: &Path) -> Result<Vec<(String, Policy)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "policy"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().expect("policy file has a stem").to_string_lossy().into_owned();
            Ok((name, load_policy(p).map_err(|e| ExperimentError::Data(format!("{}: {e}", p.display())))?))
        })
        .collect()
}

/// Test-log value of the candidate chosen by every selector in one cell.
fn select_cell(cell: &Cell, cfg: &SelectConfig) -> Result<Vec<f64>> {
    let read = |name: &str| {
        let p = cell.dir.join(name);
        read_log(&p).map_err(|e| ExperimentError::Data(format!("{}: {e}", p.display())))
    };
    let candidates = load_candidates(&cell.dir)?;
    let test = read("test.csv")?;
    let values = candidates
        .iter()
        .map(|(name, pi)| Ok((name.clone(), iw_estimate(&iw_trace(&test, pi, false)?)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let spec = BoundSpec::new(BoundMethod::PCrp, cfg.delta)?;
    let task = SelectionTask::new(read("selection.csv")?, candidates, spec)?;
    cfg.selectors
        .iter()
        .map(|s| {
            let outcome = match s {
                Selector::Iw => iw_select(&task)?,
                Selector::Bound(m) => pub_select(&task.with_method(*m)?)?,
            };
            Ok(values[&outcome.chosen])
        })
        .collect()
}

/// Fraction, then per-selector chosen values and relative improvements
/// across seeds, keyed by `(dataset, fraction bits)`.
type Group = (f64, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Runs every selector on each cell of a `learn` pool, scores the choice by
/// its test-log value and compares selectors across seeds.
pub fn run_select(cfg: &SelectConfig, echo: BTreeMap<String, String>) -> Result<ExperimentReport> {
    check_delta(cfg.delta)?;
    if cfg.selectors.is_empty() {
        return Err(config_err("select needs at least one selector"));
    }
    let names: Vec<String> = cfg.selectors.iter().map(|s| s.to_string()).collect();
    let baseline = cfg
        .selectors
        .iter()
        .position(|s| *s == Selector::Iw)
        .ok_or_else(|| config_err("the iw selector is required as the baseline"))?;
    let mut rows = Vec::new();
    let mut groups: BTreeMap<(String, u64), Group> = BTreeMap::new();
    for cell in scan_pool(cfg)? {
        let chosen = select_cell(&cell, cfg)?;
        let g = groups
            .entry((cell.dataset.clone(), cell.fraction.to_bits()))
            .or_insert_with(|| (cell.fraction, vec![vec![]; names.len()], vec![vec![]; names.len()]));
        for (i, name) in names.iter().enumerate() {
            let ri = relative_improvement(chosen[i], chosen[baseline]).ok();
            let row = |metric: &str, v: Option<f64>| {
                ReportRow::new("select", name, &cell.dataset, metric, v)
                    .fraction(cell.fraction)
                    .seed(cell.seed)
            };
            rows.push(row("chosen_value", Some(chosen[i])));
            rows.push(row("relative_improvement", ri));
            g.1[i].push(chosen[i]);
            if let Some(ri) = ri {
                g.2[i].push(ri);
            }
        }
    }
    for ((dataset, _), (fraction, values, ris)) in &groups {
        let row = |method: &str, metric: &str, v: Option<f64>| {
            ReportRow::new("select", method, dataset, metric, v).fraction(*fraction)
        };
        let means: Vec<f64> = values.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        let best = (0..names.len())
            .fold(0, |b, i| if means[i] > means[b] { i } else { b });
        for (i, name) in names.iter().enumerate() {
            let mri = (!ris[i].is_empty()).then(|| ris[i].iter().sum::<f64>() / ris[i].len() as f64);
            rows.push(row(name, "mean_relative_improvement", mri));
            rows.push(row(name, "mean_chosen_value", Some(means[i])));
            rows.push(row(name, "best", Some(f64::from(u8::from(i == best)))));
            let indist = if i == best {
                Some(1.0)
            } else {
                let d: Vec<f64> = values[best].iter().zip(&values[i]).map(|(b, x)| b - x).collect();
                paired_t_test(&d).map(|(_, p)| f64::from(u8::from(p > INDISTINGUISHABLE_P)))
            };
            rows.push(row(name, "indistinguishable_from_best", indist));
            for (j, other) in names.iter().enumerate().skip(i + 1) {
                let d: Vec<f64> = values[i].iter().zip(&values[j]).map(|(a, b)| a - b).collect();
                let test = paired_t_test(&d).filter(|(t, _)| t.is_finite());
                let pair = format!("{name}|{other}");
                rows.push(row(&pair, "t_stat", test.map(|t| t.0)));
                rows.push(row(&pair, "p_value", test.map(|t| t.1)));
            }
        }
    }
    Ok(ExperimentReport::new("select", echo, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_names_roundtrip() {
        for s in SelectConfig::default().selectors {
            assert_eq!(s.to_string().parse::<Selector>().unwrap(), s);
        }
        assert!("nonsense".parse::<Selector>().is_err());
    }

    #[test]
    fn missing_pool_is_data_error() {
        let cfg = SelectConfig {
            pool: PathBuf::from("/nonexistent/pool/dir"),
            ..SelectConfig::default()
        };
        assert!(matches!(run_select(&cfg, BTreeMap::new()), Err(ExperimentError::Data(_))));
    }

    #[test]
    fn iw_required() {
        let cfg = SelectConfig {
            selectors: vec![Selector::Bound(BoundMethod::PCrp)],
            ..SelectConfig::default()
        };
        assert!(matches!(run_select(&cfg, BTreeMap::new()), Err(ExperimentError::Config(_))));
    }
}
