//! Small coverage study: how often each lower bound exceeds the true mean.

use std::collections::BTreeMap;

use offpolicy_betting::experiments::{run_coverage, CoverageConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = CoverageConfig { n: 200, trials: 100, ..CoverageConfig::default() };
    let report = run_coverage(&cfg, BTreeMap::new())?;
    for r in report.find("violation_rate_final", None) {
        let mean_lcb = report
            .rows
            .iter()
            .find(|m| m.metric == "mean_lcb" && m.method == r.method && m.dataset == r.dataset)
            .and_then(|m| m.value)
            .unwrap_or(f64::NAN);
        println!(
            "{:<18} {:<12} violation rate {:.3}  mean lcb {:.4}",
            r.dataset,
            r.method,
            r.value.unwrap_or(f64::NAN),
            mean_lcb
        );
    }
    report.write_csv(std::io::stdout().lock())?;
    Ok(())
}
