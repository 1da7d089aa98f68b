use super::{check_samples, mean_and_biased_variance, BoundResult, ConfidenceError, Result};

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(ConfidenceError::InvalidDelta(delta))
    }
}

/// Closed-form empirical-Bernstein relaxation of the pCRP★ bound.
///
/// With `H = ln(√(π(n+1))/δ)` and `g = 1 - 2H/n`, the bound is
/// `μ̂ - (μ̂H/n + √(μ̂²H²/n² + 4V̂H g/n)) / g`, floored at zero. When
/// `2H/n ≥ 1` the relaxation is vacuous and zero is returned unconverged.
pub fn eb_relaxation_lcb(ys: &[f64], delta: f64) -> Result<BoundResult> {
    check_samples(ys)?;
    check_delta(delta)?;
    let n = ys.len() as f64;
    let h = ((std::f64::consts::PI * (n + 1.0)).sqrt() / delta).ln();
    let g = 1.0 - 2.0 * h / n;
    if g <= 0.0 {
        return Ok(BoundResult::zero(false));
    }
    let (mu, var) = mean_and_biased_variance(ys);
    let a = mu * h / n;
    let width = (a + (a * a + 4.0 * var * h / n * g).sqrt()) / g;
    Ok(BoundResult::closed_form(mu - width))
}

/// Empirical-Bernstein baseline `max(0, μ̂ - √(2 V̂ ln(2/δ) / n))` with the
/// biased sample variance.
pub fn maurer_eb_lcb(ys: &[f64], delta: f64) -> Result<BoundResult> {
    check_samples(ys)?;
    check_delta(delta)?;
    let n = ys.len() as f64;
    let (mu, var) = mean_and_biased_variance(ys);
    let width = (2.0 * var * (2.0 / delta).ln() / n).sqrt();
    Ok(BoundResult::closed_form(mu - width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confidence::{lcb, BoundMethod, BoundSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eb_relaxation_constant_data() {
        let n = 400;
        let ys = vec![0.8; n];
        let delta = 0.1;
        let nf = n as f64;
        let h = ((std::f64::consts::PI * (nf + 1.0)).sqrt() / delta).ln();
        let expect = 0.8 - (2.0 * 0.8 * h / nf) / (1.0 - 2.0 * h / nf);
        let r = eb_relaxation_lcb(&ys, delta).unwrap();
        assert!((r.lcb - expect).abs() < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn eb_relaxation_gate() {
        let r = eb_relaxation_lcb(&[1.0, 2.0, 3.0], 0.1).unwrap();
        assert_eq!(r.lcb, 0.0);
        assert!(!r.converged);
    }

    #[test]
    fn maurer_examples() {
        assert!((maurer_eb_lcb(&[0.3; 10], 0.1).unwrap().lcb - 0.3).abs() < 1e-15);
        let r = maurer_eb_lcb(&[0.0, 1.0], 0.1).unwrap();
        let raw = 0.5 - (2.0 * 0.25 * 20f64.ln() / 2.0).sqrt();
        assert!(raw < 0.0);
        assert_eq!(r.lcb, 0.0);
        let ys = [0.2, 0.4, 0.9, 0.5, 0.3, 0.7, 0.6, 0.1, 0.8, 0.5];
        let (mu, var) = mean_and_biased_variance(&ys);
        let expect = mu - (2.0 * var * 20f64.ln() / 10.0).sqrt();
        assert!((maurer_eb_lcb(&ys, 0.1).unwrap().lcb - expect.max(0.0)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs_floor_at_zero() {
        assert!(maurer_eb_lcb(&[], 0.1).is_err());
        assert!(eb_relaxation_lcb(&[1.0], 1.5).is_err());
        let r = maurer_eb_lcb(&[0.0, 1e6], 0.1).unwrap();
        assert_eq!(r.lcb, 0.0);
    }

    /// The relaxation is not claimed to sit below pCRP★ deterministically;
    /// the count of violations is measured and reported, and the bound is
    /// only required to stay valid (nonnegative and below the sample mean).
    #[test]
    fn relaxation_versus_pcrp_is_measured() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut violations = 0;
        for _ in 0..1000 {
            let n = rng.random_range(50..400);
            let scale = rng.random_range(0.1..3.0);
            let ys: Vec<f64> = (0..n).map(|_| scale * rng.random::<f64>()).collect();
            let eb = eb_relaxation_lcb(&ys, 0.1).unwrap().lcb;
            let pc = lcb(&ys, &BoundSpec::new(BoundMethod::PCrp, 0.1).unwrap()).unwrap().lcb;
            let mean = ys.iter().sum::<f64>() / n as f64;
            assert!(eb >= 0.0 && eb <= mean);
            if eb > pc + 1e-8 {
                violations += 1;
            }
        }
        println!("eb-relax above pcrp in {violations}/1000 instances");
    }
}
