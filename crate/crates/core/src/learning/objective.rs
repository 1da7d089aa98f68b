use super::{Family, LearningError, Objective, Result};
use crate::bandit::{BanditError, LoggedInteraction, Policy};

/// `1/π_ref(a|x_t)` for every action of every record, needed by PL only.
pub(crate) fn inverse_behavior(
    obj: &Objective,
    log: &[LoggedInteraction],
    behavior: Option<&Policy>,
) -> Result<Option<Vec<Vec<f64>>>> {
    if obj.family != Family::Pl {
        return Ok(None);
    }
    let behavior = behavior.ok_or_else(|| LearningError::MissingBehavior(obj.family.to_string()))?;
    log.iter()
        .map(|rec| {
            let p = behavior.action_probs(&rec.context)?;
            p.iter()
                .map(|&v| {
                    if v > 0.0 {
                        Ok(1.0 / v)
                    } else {
                        Err(BanditError::PropensityOutOfRange(v).into())
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn logged_prob(probs: &[f64], rec: &LoggedInteraction) -> Result<f64> {
    probs.get(rec.action).copied().ok_or_else(|| {
        BanditError::ActionOutOfRange {
            action: rec.action,
            k: probs.len(),
        }
        .into()
    })
}

/// One record's contribution given the target's action probabilities.
pub(crate) fn record_value(obj: &Objective, probs: &[f64], rec: &LoggedInteraction, inv: Option<&[f64]>) -> Result<f64> {
    let pa = logged_prob(probs, rec)?;
    let (r, p, beta) = (rec.reward, rec.propensity, obj.beta);
    Ok(match obj.family {
        Family::Score(phi) => phi.value(beta * pa * r / p),
        Family::Iw => pa * r / p,
        Family::Naive => pa * r,
        Family::Pl => {
            let inv = inv.expect("behavior probabilities prepared for PL");
            pa * r / p - beta * probs.iter().zip(inv).map(|(q, w)| q * w).sum::<f64>()
        }
        Family::ClippedIw => pa * r / p.max(beta),
        Family::Ix => pa * r / (p + beta),
    })
}

/// Writes `∂ value / ∂ π(·|x)` into `g`.
pub(crate) fn record_dprobs(obj: &Objective, probs: &[f64], rec: &LoggedInteraction, inv: Option<&[f64]>, g: &mut [f64]) -> Result<()> {
    let pa = logged_prob(probs, rec)?;
    let (r, p, beta) = (rec.reward, rec.propensity, obj.beta);
    g.iter_mut().for_each(|v| *v = 0.0);
    g[rec.action] = match obj.family {
        Family::Score(phi) => phi.derivative(beta * pa * r / p) * beta * r / p,
        Family::Iw | Family::Pl => r / p,
        Family::Naive => r,
        Family::ClippedIw => r / p.max(beta),
        Family::Ix => r / (p + beta),
    };
    if obj.family == Family::Pl {
        let inv = inv.expect("behavior probabilities prepared for PL");
        for (gv, w) in g.iter_mut().zip(inv) {
            *gv -= beta * w;
        }
    }
    Ok(())
}

/// Adds `scale · Σ_c g_c ∂π_c/∂W` for `π = softmax(W x / τ)` into `grad`.
pub(crate) fn add_softmax_grad(probs: &[f64], g: &[f64], x: &[f64], temperature: f64, scale: f64, grad: &mut [Vec<f64>]) {
    let mean_g: f64 = probs.iter().zip(g).map(|(p, v)| p * v).sum();
    for ((row, &pb), &gb) in grad.iter_mut().zip(probs).zip(g) {
        let coef = scale * pb * (gb - mean_g) / temperature;
        if coef != 0.0 {
            for (w, xv) in row.iter_mut().zip(x) {
                *w += coef * xv;
            }
        }
    }
}

/// The objective summed over the whole log. PL needs the behavior policy.
pub fn objective_value(obj: &Objective, log: &[LoggedInteraction], pi: &Policy, behavior: Option<&Policy>) -> Result<f64> {
    let inv = inverse_behavior(obj, log, behavior)?;
    let mut total = 0.0;
    for (t, rec) in log.iter().enumerate() {
        let probs = pi.action_probs(&rec.context)?;
        total += record_value(obj, &probs, rec, inv.as_ref().map(|v| v[t].as_slice()))?;
    }
    Ok(total)
}

/// Gradient of [`objective_value`] with respect to the `K × d` weights of a
/// linear-softmax policy.
pub fn objective_gradient(
    obj: &Objective,
    log: &[LoggedInteraction],
    pi: &Policy,
    behavior: Option<&Policy>,
) -> Result<Vec<Vec<f64>>> {
    let Policy::LinearSoftmax { weights, temperature } = pi else {
        return Err(LearningError::NonDifferentiable);
    };
    let inv = inverse_behavior(obj, log, behavior)?;
    let mut grad = vec![vec![0.0; weights[0].len()]; weights.len()];
    let mut g = vec![0.0; weights.len()];
    for (t, rec) in log.iter().enumerate() {
        let probs = pi.action_probs(&rec.context)?;
        record_dprobs(obj, &probs, rec, inv.as_ref().map(|v| v[t].as_slice()), &mut g)?;
        add_softmax_grad(&probs, &g, &rec.context, *temperature, 1.0, &mut grad);
    }
    Ok(grad)
}
