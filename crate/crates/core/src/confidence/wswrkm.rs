use super::{check_samples, BoundMethod, BoundResult, BoundSpec, ConfidenceError, Diagnostics, Result};
use crate::numerics::{root::bisect_root_counted, Bracket, Tolerance};

const GRID: usize = 256;
const GRID_SPAN: f64 = 1e-12;

/// Per-round bet slopes `k_t = √(2 ln(1/δ) / (σ̂²_{t-1} t ln(t+1)))`, so that
/// the bet at candidate mean `ν` is `min(ν k_t, c)`.
///
/// `σ̂²_t = (σ₀² + Σ_{i≤t} (Y_i - r̄_i)²) / (t + 1)` where `r̄_i` is the running
/// mean of the first `i` observations clipped at one.
fn bet_slopes(ys: &[f64], delta: f64, sigma0_sq: f64) -> Vec<f64> {
    let log_inv_delta = (1.0 / delta).ln();
    let mut slopes = Vec::with_capacity(ys.len());
    let mut sum = 0.0;
    let mut sq = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let t = (i + 1) as f64;
        let prev_var = (sigma0_sq + sq) / t;
        slopes.push((2.0 * log_inv_delta / (prev_var * t * (t + 1.0).ln())).sqrt());
        sum += y;
        let rbar = (sum / t).min(1.0);
        sq += (y - rbar) * (y - rbar);
    }
    slopes
}

/// Bets `b_t(ν)` of the adaptive scheme for every round.
pub fn wswrkm_bet(ys: &[f64], nu: f64, spec: &BoundSpec) -> Result<Vec<f64>> {
    let BoundMethod::Wswrkm { c, sigma0_sq } = spec.method else {
        return Err(ConfidenceError::MismatchedAccumulator(spec.method));
    };
    Ok(bet_slopes(ys, spec.delta, sigma0_sq)
        .into_iter()
        .map(|k| (nu * k).min(c))
        .collect())
}

fn log_wealth(ys: &[f64], slopes: &[f64], c: f64, nu: f64) -> f64 {
    ys.iter()
        .zip(slopes)
        .map(|(&y, &k)| ((nu * k).min(c) * (y / nu - 1.0)).ln_1p())
        .sum()
}

/// Infimum of `{ν : W_n(ν) < 1/δ}` for the adaptive-bet wealth.
///
/// The wealth need not be monotone in `ν`, so a log-spaced grid over
/// `(10⁻¹² h, h]` with `h = max Y + μ̂` is scanned upwards for the first
/// point inside the set and the crossing is refined by bisection. Grid points
/// above it that leave the set again are flagged in the diagnostics.
pub fn wswrkm_lcb(ys: &[f64], spec: &BoundSpec) -> Result<BoundResult> {
    check_samples(ys)?;
    let BoundMethod::Wswrkm { c, sigma0_sq } = spec.method else {
        return Err(ConfidenceError::MismatchedAccumulator(spec.method));
    };
    spec.method.validate()?;
    let threshold = (1.0 / spec.delta).ln();
    let slopes = bet_slopes(ys, spec.delta, sigma0_sq);
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let max = ys.iter().copied().fold(0.0, f64::max);
    let hi = max + mean;
    if !(hi > 0.0) {
        return Ok(BoundResult::zero(true));
    }
    let f = |nu: f64| log_wealth(ys, &slopes, c, nu) - threshold;
    let lo = hi * GRID_SPAN;
    let step = (hi / lo).ln() / (GRID - 1) as f64;
    let grid: Vec<f64> = (0..GRID)
        .map(|i| if i == GRID - 1 { hi } else { lo * (step * i as f64).exp() })
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&nu| f(nu)).collect();
    let Some(first) = vals.iter().position(|&v| v < 0.0) else {
        // above max Y every factor shrinks, so this is unreachable for valid input
        return Ok(BoundResult::zero(false));
    };
    let non_monotone = vals[first..].iter().any(|&v| v >= 0.0);
    if first == 0 {
        let mut r = BoundResult::zero(true);
        r.diagnostics.non_monotone = non_monotone;
        return Ok(r);
    }
    let br = Bracket::from_values(grid[first - 1], grid[first], vals[first - 1], vals[first])?;
    let tol = Tolerance::new(1e-12 * hi, 1e-10, 400)?;
    let (nu, width, iters) = bisect_root_counted(f, br, tol)?;
    Ok(BoundResult {
        lcb: nu,
        converged: true,
        bracket_width: width,
        diagnostics: Diagnostics {
            iterations: iters,
            inner_b: None,
            non_monotone,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sigma0_sq: f64) -> BoundSpec {
        BoundSpec::new(BoundMethod::wswrkm(sigma0_sq), 0.05).unwrap()
    }

    #[test]
    fn all_zero_data() {
        let r = wswrkm_lcb(&[0.0; 30], &spec(1.0)).unwrap();
        assert_eq!(r.lcb, 0.0);
    }

    #[test]
    fn bet_is_capped_exactly() {
        let ys = [0.5, 0.1, 0.9, 0.3];
        let s = spec(1e-4);
        let bets = wswrkm_bet(&ys, 10.0, &s).unwrap();
        let slopes = bet_slopes(&ys, 0.05, 1e-4);
        for (b, k) in bets.iter().zip(slopes) {
            if 10.0 * k > 0.5 {
                assert_eq!(*b, 0.5);
            } else {
                assert_eq!(*b, 10.0 * k);
            }
        }
    }

    #[test]
    fn first_slope_uses_prior_variance() {
        let k = bet_slopes(&[3.0], 0.05, 2.0);
        let expect = (2.0 * 20f64.ln() / (2.0 * 2f64.ln())).sqrt();
        assert!((k[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn running_variance_centers_at_own_index() {
        // after Y_1 = 3: r̄_1 = min(3, 1) = 1, so σ̂²_1 = (σ₀² + 4) / 2
        let k = bet_slopes(&[3.0, 0.0], 0.05, 2.0);
        let var1 = (2.0 + 4.0) / 2.0;
        let expect = (2.0 * 20f64.ln() / (var1 * 2.0 * 3f64.ln())).sqrt();
        assert!((k[1] - expect).abs() < 1e-15);
    }

    #[test]
    fn bound_is_below_mean_and_threshold_is_met() {
        let ys: Vec<f64> = (0..500).map(|i| 0.5 + 0.4 * ((i as f64) * 0.7).sin()).collect();
        let s = spec(1.0);
        let r = wswrkm_lcb(&ys, &s).unwrap();
        let mean = ys.iter().sum::<f64>() / 500.0;
        assert!(r.lcb > 0.0 && r.lcb < mean);
        let slopes = bet_slopes(&ys, 0.05, 1.0);
        let thr = 20f64.ln();
        assert!((log_wealth(&ys, &slopes, 0.5, r.lcb) - thr).abs() < 1e-6);
    }

    #[test]
    fn wrong_method_is_rejected() {
        let s = BoundSpec::new(BoundMethod::PCrp, 0.1).unwrap();
        assert!(wswrkm_lcb(&[1.0], &s).is_err());
    }
}
