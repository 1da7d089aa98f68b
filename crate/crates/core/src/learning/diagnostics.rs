use serde::{Deserialize, Serialize};

use super::{LearningError, Result, ScoreFunction};

/// Violations below this are treated as rounding.
const SANDWICH_TOL: f64 = 1e-12;

/// `n` geometrically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    i if i == n - 1 => hi,
                    i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub points: usize,
    /// Points where either inequality fails by more than rounding.
    pub violations: usize,
    /// Largest `lower(x) - φ(x)` over the grid.
    pub max_lower_violation: f64,
    /// Largest `φ(x) - ln(1 + x)` over the grid.
    pub max_upper_violation: f64,
    /// Grid point with the largest violation of either side.
    pub worst_x: f64,
}

/// Checks `-ln(1 - x + x²/(c₁ + c₂x)) ≤ φ(x) ≤ ln(1 + x)` at every grid point.
pub fn assumption1_check_fn(phi: impl Fn(f64) -> f64, c1: f64, c2: f64, grid: &[f64]) -> Result<Assumption1Report> {
    if grid.is_empty() || grid.iter().any(|&x| !(x >= 0.0)) {
        return Err(LearningError::DomainError("grid must be nonempty and nonnegative".into()));
    }
    if !(c1 > 0.0 && c1 <= 1.0 && c2 > 0.0 && c2 <= 1.0) {
        return Err(LearningError::DomainError(format!("constants must lie in (0, 1], got {c1}, {c2}")));
    }
    let mut report = Assumption1Report {
        points: grid.len(),
        violations: 0,
        max_lower_violation: f64::NEG_INFINITY,
        max_upper_violation: f64::NEG_INFINITY,
        worst_x: grid[0],
    };
    let mut worst = f64::NEG_INFINITY;
    for &x in grid {
        let v = phi(x);
        // 1 - x + x²/(c₁ + c₂x) over a common denominator, avoiding cancellation
        let lower = (c2 / c1 * x).ln_1p() - (((c2 - c1) * x + (1.0 - c2) * x * x) / c1).ln_1p();
        let upper = x.ln_1p();
        let (lo_gap, up_gap) = (lower - v, v - upper);
        report.max_lower_violation = report.max_lower_violation.max(lo_gap);
        report.max_upper_violation = report.max_upper_violation.max(up_gap);
        if lo_gap > SANDWICH_TOL || up_gap > SANDWICH_TOL {
            report.violations += 1;
        }
        if lo_gap.max(up_gap) > worst {
            worst = lo_gap.max(up_gap);
            report.worst_x = x;
        }
    }
    Ok(report)
}

pub fn assumption1_check(phi: ScoreFunction, grid: &[f64]) -> Result<Assumption1Report> {
    assumption1_check_fn(|x| phi.value(x), phi.c1(), phi.c2(), grid)
}

/// Plug-in estimate over the empirical distribution of a weighted-reward trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeInfluenceEstimate {
    /// `(1/β) ln E[exp(φ(β r̃) - β E r̃)]`, which is `≤ 0` because `φ(x) ≤ ln(1 + x)`.
    pub log_moment: f64,
    /// The nonnegative size of the negative influence, `-log_moment`.
    pub value: f64,
    pub n_mc: usize,
    /// Jackknife standard error of `value` (0 for a single sample).
    pub std_err: f64,
}

fn log_moment(sum_expm1: f64, sum_r: f64, n: f64, beta: f64) -> f64 {
    ((sum_expm1 / n).ln_1p() - beta * sum_r / n) / beta
}

pub fn negative_influence(phi: ScoreFunction, beta: f64, trace: &[f64]) -> Result<NegativeInfluenceEstimate> {
    if trace.is_empty() {
        return Err(LearningError::DomainError("empty trace".into()));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(LearningError::DomainError(format!("beta must be positive, got {beta}")));
    }
    if trace.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(LearningError::DomainError("trace values must be finite and nonnegative".into()));
    }
    let terms: Vec<f64> = trace.iter().map(|&r| phi.value(beta * r).exp_m1()).collect();
    let s: f64 = terms.iter().sum();
    let m: f64 = trace.iter().sum();
    let n = trace.len();
    let full = log_moment(s, m, n as f64, beta);
    let std_err = if n > 1 {
        let loo: Vec<f64> = terms
            .iter()
            .zip(trace)
            .map(|(&e, &r)| log_moment(s - e, m - r, (n - 1) as f64, beta))
            .collect();
        let mean = loo.iter().sum::<f64>() / n as f64;
        let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
        ((n - 1) as f64 / n as f64 * ss).sqrt()
    } else {
        0.0
    };
    Ok(NegativeInfluenceEstimate {
        log_moment: full,
        value: -full,
        n_mc: n,
        std_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-4, 1e3, 49);
        assert_eq!(g.len(), 49);
        assert_eq!((g[0], g[48]), (1e-4, 1e3));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn builtins_satisfy_sandwich() {
        let grid = log_grid(1e-8, 1e8, 2001);
        for s in ScoreFunction::ALL {
            let r = assumption1_check(s, &grid).unwrap();
            assert_eq!(r.violations, 0, "{s:?}: {r:?}");
        }
        let r = assumption1_check(ScoreFunction::Ls, &[0.0]).unwrap();
        assert_eq!((r.max_lower_violation, r.max_upper_violation), (0.0, 0.0));
    }

    #[test]
    fn identity_violates_upper() {
        let grid = log_grid(1e-3, 10.0, 20);
        let r = assumption1_check_fn(|x| x, 1.0, 1.0, &grid).unwrap();
        assert_eq!(r.violations, 20);
        assert!(r.max_upper_violation > 0.0);
    }

    #[test]
    fn constant_trace_closed_form() {
        let (c, beta) = (0.7, 0.4);
        let est = negative_influence(ScoreFunction::Ls, beta, &[c; 5]).unwrap();
        let expect = ((beta * c).ln_1p() - beta * c) / beta;
        assert!((est.log_moment - expect).abs() < 1e-15);
        assert!(est.value >= 0.0);
        assert!(est.std_err < 1e-12);
    }

    #[test]
    fn ordering_on_shared_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trace: Vec<f64> = (0..500).map(|_| rng.random::<f64>().powi(-2) - 1.0).collect();
        for beta in [0.05, 0.3, 1.0] {
            let f = negative_influence(ScoreFunction::Freezing, beta, &trace).unwrap();
            let c = negative_influence(ScoreFunction::Clipping, beta, &trace).unwrap();
            let l = negative_influence(ScoreFunction::Ls, beta, &trace).unwrap();
            assert!(f.log_moment <= c.log_moment && c.log_moment <= l.log_moment);
            assert!(l.value >= 0.0);
        }
    }

    #[test]
    fn vanishes_as_beta_shrinks() {
        let trace = [0.0, 0.5, 2.0, 7.5, 1.25];
        for s in ScoreFunction::ALL {
            let est = negative_influence(s, 1e-9, &trace).unwrap();
            assert!(est.log_moment.abs() < 1e-6, "{s:?}: {}", est.log_moment);
        }
    }
}
