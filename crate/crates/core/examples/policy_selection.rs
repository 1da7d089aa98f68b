//! Pessimistic policy selection on a tabular environment with exact values,
//! compared with picking the highest importance-weighted estimate.

use std::collections::BTreeMap;

use offpolicy_betting::bandit::{Policy, TabularEnv};
use offpolicy_betting::confidence::{BoundMethod, BoundSpec};
use offpolicy_betting::selection::{compare_selectors, iw_select, score_outcome, Scoring, SelectionTask};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let behavior = Policy::tabular(vec![vec![0.7, 0.2, 0.1], vec![0.6, 0.3, 0.1]])?;
    let env = TabularEnv::new(vec![0.5, 0.5], vec![vec![0.5, 0.6, 0.9], vec![0.5, 0.7, 0.2]], behavior)?;
    let candidates = vec![
        ("behavior".to_string(), env.behavior.clone()),
        ("always-0".to_string(), Policy::fixed(vec![1.0, 0.0, 0.0])?),
        ("always-1".to_string(), Policy::fixed(vec![0.0, 1.0, 0.0])?),
        ("rare-2".to_string(), Policy::tabular(vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]])?),
        ("mixed".to_string(), Policy::fixed(vec![0.4, 0.4, 0.2])?),
    ];
    let values: BTreeMap<String, f64> = candidates
        .iter()
        .map(|(n, p)| Ok((n.clone(), env.true_value(p)?)))
        .collect::<Result<_, Box<dyn std::error::Error>>>()?;
    for (n, v) in &values {
        println!("{n:<9} true value {v:.4}");
    }
    let log = env.sample(300, 11)?;
    let task = SelectionTask::new(log, candidates, BoundSpec::new(BoundMethod::PCrp, 0.1)?)?;
    println!("per-policy level δ/|Π| = {}", task.per_policy_level());
    let scoring = Scoring { values: &values, baseline: "behavior" };
    let mut results = vec![score_outcome("iw".into(), iw_select(&task)?, Some(scoring))?];
    results.extend(compare_selectors(
        &task,
        &[BoundMethod::PCrp, BoundMethod::MaurerEb, BoundMethod::wswrkm(1.0)],
        Some(scoring),
    )?);
    for r in results {
        println!(
            "{:<10} chose {:<9} value {:.4}  vs behavior {:+.3}",
            r.method,
            r.outcome.chosen,
            r.chosen_value.unwrap_or(f64::NAN),
            r.relative_improvement.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
