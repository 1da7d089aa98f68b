//! Writes a log and a policy to disk in the formats `opbet` reads, reads them
//! back and evaluates the policy.

use offpolicy_betting::bandit::io::{load_policy, read_log, save_policy, write_log};
use offpolicy_betting::bandit::{Policy, TabularEnv};
use offpolicy_betting::confidence::{evaluate_policy_interval, BoundMethod, BoundSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("opbet-example-io");
    std::fs::create_dir_all(&dir)?;
    let behavior = Policy::fixed(vec![0.5, 0.5])?;
    let env = TabularEnv::new(vec![1.0], vec![vec![0.3, 0.8]], behavior)?;
    let log = env.sample(500, 9)?;
    let target = Policy::linear_softmax(vec![vec![0.0], vec![2.0]], 1.0)?;

    for name in ["log.csv", "log.jsonl"] {
        let path = dir.join(name);
        write_log(&path, &log)?;
        assert_eq!(read_log(&path)?, log);
        let text = std::fs::read_to_string(&path)?;
        println!("{}:\n{}", path.display(), text.lines().take(3).collect::<Vec<_>>().join("\n"));
    }
    let ppath = dir.join("target.policy");
    save_policy(&ppath, &target)?;
    println!("{}:\n{}", ppath.display(), std::fs::read_to_string(&ppath)?);
    let loaded = load_policy(&ppath)?;
    let iv = evaluate_policy_interval(&read_log(&dir.join("log.csv"))?, &loaded, &BoundSpec::new(BoundMethod::PCrp, 0.05)?)?;
    println!("interval [{:.4}, {:.4}], true value {:.4}", iv.lcb, iv.ucb, env.true_value(&target)?);
    Ok(())
}
