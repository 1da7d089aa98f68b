//! Learns softmax policies from logged bandit feedback with the IW objective
//! and the freezing score function, and compares their held-out values.

use offpolicy_betting::bandit::{
    bandit_from_classification, iw_estimate, iw_trace, synthetic_blobs, train_logistic, LogisticConfig, Policy,
    Standardizer,
};
use offpolicy_betting::learning::{train_policy, Family, Objective, ScoreFunction, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synthetic_blobs(3000, 4, 4, 1)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let (clf_idx, rest) = idx.split_at(300);
    let (train_idx, test_idx) = rest.split_at(400);
    let scaler = Standardizer::fit(&data.subset(clf_idx));
    let weak = scaler.transform(&data.subset(&clf_idx[..40]));
    let behavior = Policy::deterministic(train_logistic(&weak, &LogisticConfig { max_iter: 20, ..Default::default() })?)?;
    let train = bandit_from_classification(&scaler.transform(&data.subset(train_idx)), &behavior, 0.2, 2, None)?;
    let test = bandit_from_classification(&scaler.transform(&data.subset(test_idx)), &behavior, 0.2, 3, None)?;
    let logging = Policy::epsilon_mixture(behavior.clone(), 0.2)?;
    println!("behavior policy value {:.4}", iw_estimate(&iw_trace(&test, &logging, false)?)?);

    let cfg = TrainConfig::default();
    for obj in [
        Objective::new(Family::Iw, 0.0)?,
        Objective::score(ScoreFunction::Freezing, 0.1)?,
        Objective::score(ScoreFunction::Freezing, 1.0)?,
        Objective::score(ScoreFunction::Ls, 1.0)?,
    ] {
        let trained = train_policy(&obj, &train, data.num_classes, Some(&logging), &cfg)?;
        let v = iw_estimate(&iw_trace(&test, &trained.deterministic, false)?)?;
        println!(
            "{:<9} beta {:<4} final objective {:.4}  held-out value {v:.4}",
            obj.family.to_string(),
            obj.beta,
            trained.epoch_objective.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
