//! Bound trajectories on the heavy-tailed importance-weighting environment:
//! the betting bound stays stable while the empirical-Bernstein bound swings.

use std::collections::BTreeMap;

use offpolicy_betting::confidence::BoundMethod;
use offpolicy_betting::experiments::{run_heavytail, HeavyTailConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = HeavyTailConfig {
        methods: vec![BoundMethod::PCrp, BoundMethod::MaurerEb, BoundMethod::wswrkm(1.0)],
        checkpoints: vec![10, 100, 1000],
        trials: 30,
        ..HeavyTailConfig::default()
    };
    let report = run_heavytail(&cfg, BTreeMap::new())?;
    let truth = report.find("mean", Some("truth")).next().and_then(|r| r.value).unwrap_or(f64::NAN);
    println!("target value {truth:.4}");
    for method in ["pcrp", "maurer-eb", "wswrkm:1", "sample-mean"] {
        for t in &cfg.checkpoints {
            let get = |m: &str| {
                report
                    .find(&format!("{m}@t={t}"), Some(method))
                    .next()
                    .and_then(|r| r.value)
                    .unwrap_or(f64::NAN)
            };
            println!(
                "{method:<12} t = {t:>5}  mean {:>8.4}  q10 {:>8.4}  q90 {:>8.4}",
                get("mean"),
                get("q10"),
                get("q90")
            );
        }
    }
    Ok(())
}
