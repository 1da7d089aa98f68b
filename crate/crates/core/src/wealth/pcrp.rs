use super::crp::crp_log_wealth_slice;
use super::{check_nu, Result, SampleBuffer, WealthError, WealthEval, WealthMethod};
use crate::numerics::{bisect_root, Bracket, Tolerance};

/// Upper end of the betting-fraction range when a zero observation is present.
const B_MAX_WITH_ZEROS: f64 = 1.0 - 1e-12;

/// Maximizer of the CRP log-wealth `b ↦ Σ ln(1 + b(z_t - 1))` with
/// `z_t = y_t / ν`.
///
/// The objective is concave, so the optimum is the root of its derivative
/// when one exists in the interior and an endpoint otherwise.
pub fn pcrp_optimal_fraction(ys: &[f64], nu: f64) -> Result<f64> {
    check_nu(nu)?;
    let b_max = if ys.contains(&0.0) {
        B_MAX_WITH_ZEROS
    } else {
        1.0
    };
    let slope = |b: f64| -> f64 {
        ys.iter()
            .map(|&y| {
                let d = y / nu - 1.0;
                d / (1.0 + b * d)
            })
            .sum()
    };
    let s0 = slope(0.0);
    if s0 <= 0.0 {
        return Ok(0.0);
    }
    let s1 = slope(b_max);
    if s1 >= 0.0 {
        return Ok(b_max);
    }
    let tol = Tolerance::new(1e-14, 1e-14, 200)?;
    Ok(bisect_root(slope, Bracket::from_values(0.0, b_max, s0, s1)?, tol)?)
}

/// Penalized best constant-rebalanced wealth
/// `-½ ln(π(n+1)) + sup_b Σ ln(1 - b + b y_t/ν)`.
pub fn pcrp_log_wealth(buf: &SampleBuffer, nu: f64) -> Result<WealthEval> {
    if buf.is_empty() {
        return Err(WealthError::EmptyState);
    }
    let ys = buf.values();
    let b = pcrp_optimal_fraction(ys, nu)?;
    let n = ys.len() as f64;
    let penalty = -0.5 * (std::f64::consts::PI * (n + 1.0)).ln();
    Ok(WealthEval {
        log_wealth: penalty + crp_log_wealth_slice(ys, b, nu),
        nu,
        method: WealthMethod::PCrp,
        aux: Some(b),
    })
}
