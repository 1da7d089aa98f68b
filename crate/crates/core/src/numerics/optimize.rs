use super::{NumericsError, Result, Tolerance};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a concave function on `[lo, hi]`.
///
/// Returns `(argmax, max)`. The endpoints are compared against the interior
/// optimum at the end so the reported maximum is never below `g(lo)` or
/// `g(hi)`, which matters when the optimum sits on the boundary.
pub fn maximize_concave_1d(
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<(f64, f64)> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    let mut iter = 0;
    while b - a > tol.width_at(0.5 * (a + b)) && iter < tol.max_iter {
        // NaN compares false, which moves towards the lower half; the
        // endpoint comparison below still yields a sane answer.
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
        iter += 1;
    }
    let (mut best_x, mut best) = if gc >= gd { (c, gc) } else { (d, gd) };
    let mid = 0.5 * (a + b);
    let gm = g(mid);
    if gm > best {
        best_x = mid;
        best = gm;
    }
    for x in [lo, hi] {
        let v = g(x);
        if v > best || (best.is_nan() && !v.is_nan()) {
            best_x = x;
            best = v;
        }
    }
    Ok((best_x, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_vertex() {
        let (x, v) =
            maximize_concave_1d(|b| -(b - 0.3) * (b - 0.3), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn flat_function_returns_zero() {
        // all y_t equal to nu: every factor is one
        let ys = [0.7, 0.7, 0.7];
        let nu = 0.7;
        let g = |b: f64| ys.iter().map(|y| (1.0 - b + b * y / nu).ln()).sum::<f64>();
        let (_, v) = maximize_concave_1d(g, 0.0, 1.0, Tolerance::default()).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn boundary_optimum_is_found() {
        let (x, v) = maximize_concave_1d(|b| b, 0.0, 1.0, Tolerance::default()).unwrap();
        assert_eq!(x, 1.0);
        assert_eq!(v, 1.0);
        let (x, _) = maximize_concave_1d(|b| -b, 0.0, 1.0, Tolerance::default()).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn crp_log_wealth_matches_dense_grid() {
        let g = |b: f64| (1.0 + b).ln() + (1.0 + 2.0 * b).ln();
        let (_, v) = maximize_concave_1d(g, 0.0, 1.0, Tolerance::default()).unwrap();
        // dense grid oracle over 10^6 points
        let m = 1_000_000;
        let grid_max = (0..=m)
            .map(|i| g(i as f64 / m as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((v - grid_max).abs() < 1e-6);
        assert!(v >= grid_max - 1e-12);
    }

    #[test]
    fn invalid_interval() {
        assert!(matches!(
            maximize_concave_1d(|b| b, 1.0, 1.0, Tolerance::default()),
            Err(NumericsError::InvalidInterval { .. })
        ));
    }
}
