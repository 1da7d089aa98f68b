//! Two-sided interval for a target policy: the lower bound from weighted
//! rewards and the upper bound from weighted complements `w (1 - r)`.

use offpolicy_betting::bandit::{Policy, TabularEnv};
use offpolicy_betting::confidence::{evaluate_policy_interval, BoundMethod, BoundSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let behavior = Policy::fixed(vec![0.5, 0.3, 0.2])?;
    let env = TabularEnv::new(vec![0.3, 0.7], vec![vec![0.2, 0.5, 0.9], vec![0.4, 0.6, 0.1]], behavior)?;
    let target = Policy::tabular(vec![vec![0.0, 0.2, 0.8], vec![0.1, 0.9, 0.0]])?;
    let truth = env.true_value(&target)?;
    println!("true value {truth:.4}");
    for n in [100, 1000, 10_000] {
        let log = env.sample(n, n as u64)?;
        for m in [BoundMethod::PCrp, BoundMethod::MaurerEb] {
            let iv = evaluate_policy_interval(&log, &target, &BoundSpec::new(m, 0.05)?)?;
            println!("n = {n:>6}  {:<10} [{:.4}, {:.4}]", m.to_string(), iv.lcb, iv.ucb);
        }
    }
    Ok(())
}
