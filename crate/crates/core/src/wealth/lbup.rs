use serde::{Deserialize, Serialize};

use super::{check_nu, check_observation, Result, WealthError, WealthEval, WealthMethod};
use crate::numerics::{integrate, lower_incomplete_gamma_ln, maximize_concave_1d, Tolerance};

const GRID: usize = 512;
/// Largest first coordinate handed to the order-one closed form.
const CLOSED_FORM_MAX: f64 = 1e4;
/// Largest absolute rounding in the exponent accepted for integration.
const MAX_EXPONENT_ROUNDING: f64 = 1e-5;
/// `exp(-UNDERFLOW_GAP)` is below the smallest positive double.
const UNDERFLOW_GAP: f64 = 750.0;

/// Power-sum state for the lower bound on the uniform-prior universal
/// portfolio wealth of approximation order `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbupState {
    r: usize,
    /// `s_j = Σ_t y_t^j` for `j = 0..=2r`.
    moments: Vec<f64>,
    alpha0: Vec<f64>,
}

impl LbupState {
    /// Order-`r` state with the uniform prior (`α₀ = 0`).
    pub fn new(r: usize) -> Result<Self> {
        Self::with_prior(r, vec![0.0; 2 * r.max(1)])
    }

    pub fn with_prior(r: usize, alpha0: Vec<f64>) -> Result<Self> {
        if r == 0 {
            return Err(WealthError::DomainError("approximation order must be at least 1".into()));
        }
        if alpha0.len() != 2 * r || alpha0.iter().any(|a| !a.is_finite()) {
            return Err(WealthError::DomainError(format!(
                "prior hyperparameter must be {} finite values",
                2 * r
            )));
        }
        Ok(Self {
            r,
            moments: vec![0.0; 2 * r + 1],
            alpha0,
        })
    }

    pub fn from_slice(r: usize, ys: &[f64]) -> Result<Self> {
        let mut s = Self::new(r)?;
        for &y in ys {
            s.push(y)?;
        }
        Ok(s)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn alpha0(&self) -> &[f64] {
        &self.alpha0
    }

    pub fn n(&self) -> usize {
        self.moments[0] as usize
    }

    pub fn push(&mut self, y: f64) -> Result<()> {
        check_observation(y)?;
        let mut p = 1.0;
        for s in self.moments.iter_mut() {
            *s += p;
            p *= y;
        }
        Ok(())
    }

    /// `Σ_t T_r(y_t / ν)` expanded from the stored power sums.
    ///
    /// Coordinate `k < 2r` is `Σ(1-z)^{2r} - Σ(1-z)^k` and the last is
    /// `Σ(1-z)^{2r}`, clamped at zero against rounding.
    pub fn assemble_t(&self, nu: f64) -> Result<Vec<f64>> {
        check_nu(nu)?;
        let two_r = 2 * self.r;
        // scaled moments Σ z^j
        let mut sz = Vec::with_capacity(two_r + 1);
        let mut scale = 1.0;
        for &s in &self.moments {
            sz.push(s * scale);
            scale /= nu;
        }
        let centered = |m: usize| -> f64 {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for (j, z) in sz.iter().enumerate().take(m + 1) {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * z;
                binom = binom * (m - j) as f64 / (j + 1) as f64;
            }
            acc
        };
        let top = centered(two_r).max(0.0);
        let mut t: Vec<f64> = (1..two_r).map(|k| top - centered(k)).collect();
        t.push(top);
        if t.iter().any(|v| !v.is_finite()) {
            return Err(WealthError::DomainError(format!(
                "sufficient statistics overflow at nu = {nu}"
            )));
        }
        Ok(t)
    }

    pub fn log_wealth(&self, nu: f64) -> Result<WealthEval> {
        let t = self.assemble_t(nu)?;
        let alpha: Vec<f64> = t.iter().zip(&self.alpha0).map(|(a, b)| a + b).collect();
        let lw = lbup_log_partition(&alpha)? - lbup_log_partition(&self.alpha0)?;
        Ok(WealthEval {
            log_wealth: lw,
            nu,
            method: WealthMethod::Lbup,
            aux: None,
        })
    }
}

/// Exponent `θ_r(b)ᵀ α = Σ_{k<2r} α_k b^k / k + α_{2r} ln(1-b)`.
fn natural_exponent(alpha: &[f64], b: f64) -> f64 {
    let last = alpha.len() - 1;
    let mut acc = 0.0;
    let mut p = 1.0;
    for (k, a) in alpha[..last].iter().enumerate() {
        p *= b;
        acc += a * p / (k + 1) as f64;
    }
    if alpha[last] != 0.0 {
        acc += alpha[last] * (-b).ln_1p();
    }
    acc
}

/// Sum of the magnitudes of the exponent's terms at `b`; rounding in the
/// exponent is a few ulps of this.
fn exponent_magnitude(alpha: &[f64], b: f64) -> f64 {
    let last = alpha.len() - 1;
    let mut acc = 0.0;
    let mut p = 1.0;
    for (k, a) in alpha[..last].iter().enumerate() {
        p *= b;
        acc += (a * p).abs() / (k + 1) as f64;
    }
    if alpha[last] != 0.0 {
        acc += (alpha[last] * (-b).ln_1p()).abs();
    }
    acc
}

/// `ln Z_r(α) = ln ∫_0^1 exp(θ_r(b)ᵀ α) db` for `α` of length `2r`.
///
/// Order one with a moderate positive first coordinate uses the
/// incomplete-gamma closed form; everything else is integrated numerically
/// around the maximizer of the exponent.
pub fn lbup_log_partition(alpha: &[f64]) -> Result<f64> {
    if alpha.is_empty() || !alpha.len().is_multiple_of(2) || alpha.iter().any(|a| !a.is_finite()) {
        return Err(WealthError::DomainError(
            "partition argument must have a positive even number of finite entries".into(),
        ));
    }
    if alpha.iter().all(|&a| a == 0.0) {
        return Ok(0.0);
    }
    // the closed form cancels terms of size α₁, so it is only used while
    // that cancellation stays far below the target accuracy
    if alpha.len() == 2 && alpha[0] > 0.0 && alpha[0] <= CLOSED_FORM_MAX && alpha[1] > -1.0 {
        let (a1, a2) = (alpha[0], alpha[1]);
        return Ok(a1 - (a2 + 1.0) * a1.ln() + lower_incomplete_gamma_ln(a2 + 1.0, a1)?);
    }
    log_partition_quadrature(alpha)
}

/// Candidate locations of the exponent's maximum: a uniform grid plus
/// geometric refinements towards both endpoints, where peaks become narrow
/// when the statistics are large.
fn peak_grid(last: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=GRID).map(|i| i as f64 / GRID as f64).collect();
    let mut e = 1.0;
    while e > 1e-300 {
        e *= 0.25;
        g.push(e);
        if 1.0 - e < 1.0 {
            g.push(1.0 - e);
        }
    }
    if last > 0.0 {
        g.retain(|&b| b < 1.0);
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Breakpoints from `b_star` towards `end`, spaced geometrically from the
/// distance at which the exponent has dropped by one, and stopping once the
/// integrand has underflowed.
fn breakpoints(h: &impl Fn(f64) -> f64, b_star: f64, m: f64, end: f64) -> Vec<f64> {
    let dist = (end - b_star).abs();
    let dir = (end - b_star).signum();
    let mut w = dist;
    while w > dist * 1e-300 && m - h(b_star + dir * w) > 1.0 {
        w *= 0.5;
    }
    let mut pts = vec![b_star];
    while w < dist {
        let p = b_star + dir * w;
        pts.push(p);
        if m - h(p) > UNDERFLOW_GAP {
            return pts;
        }
        w *= 4.0;
    }
    pts.push(end);
    pts
}

pub(crate) fn log_partition_quadrature(alpha: &[f64]) -> Result<f64> {
    let last = *alpha.last().expect("nonempty");
    if last < 0.0 {
        return Err(WealthError::DomainError(format!(
            "numerical partition function needs a nonnegative last coordinate, got {last}"
        )));
    }
    let h = |b: f64| natural_exponent(alpha, b);
    let grid = peak_grid(last);
    let (mut i_best, mut v_best) = (0, f64::NEG_INFINITY);
    for (i, &b) in grid.iter().enumerate() {
        let v = h(b);
        if v > v_best {
            (i_best, v_best) = (i, v);
        }
    }
    let lo = grid[i_best.saturating_sub(1)];
    let hi = grid[(i_best + 1).min(grid.len() - 1)];
    let (b_star, m) = if lo < hi {
        let tol = Tolerance::new(1e-300, 1e-14, 2000)?;
        let (x, v) = maximize_concave_1d(h, lo, hi, tol)?;
        if v >= v_best {
            (x, v)
        } else {
            (grid[i_best], v_best)
        }
    } else {
        (grid[i_best], v_best)
    };
    if !m.is_finite() {
        return Err(WealthError::QuadratureFailure(crate::numerics::NumericsError::NonFinite(b_star)));
    }
    // the integrand cannot be resolved more finely than the exponent's rounding
    let rounding = 4.0 * f64::EPSILON * exponent_magnitude(alpha, b_star);
    if rounding > MAX_EXPONENT_ROUNDING {
        return Err(WealthError::QuadratureFailure(crate::numerics::NumericsError::DomainError(format!(
            "exponent rounding {rounding:e} too large to integrate"
        ))));
    }
    let rel_tol = rounding.max(1e-13);
    let shifted = |b: f64| (h(b) - m).exp();
    let mut total = 0.0;
    let mut err = 0.0;
    for end in [0.0, 1.0] {
        let pts = breakpoints(&h, b_star, m, end);
        for w in pts.windows(2) {
            let (a, b) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            if b > a {
                let part = integrate(shifted, a, b, 1e-300, rel_tol).map_err(WealthError::QuadratureFailure)?;
                total += part.value;
                err += part.abs_err;
            }
        }
    }
    if !(total > 0.0) || err > (100.0 * rel_tol).max(1e-9) * total {
        return Err(WealthError::QuadratureFailure(
            crate::numerics::NumericsError::MaxIterExceeded(0),
        ));
    }
    Ok(m + total.ln())
}
