use super::{NumericsError, Result, Tolerance};

/// An interval known to contain a sign change of some function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Evaluates `f` at both ends and checks the sign condition.
    pub fn new(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self> {
        Self::from_values(lo, hi, f(lo), f(hi))
    }

    pub fn from_values(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(NumericsError::InvalidInterval { lo, hi });
        }
        if f_lo.is_nan() || f_hi.is_nan() || f_lo * f_hi > 0.0 {
            return Err(NumericsError::NoSignChange { lo, hi, f_lo, f_hi });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisection on a sign-changing bracket.
///
/// Returns the midpoint of the final interval once its width falls below
/// `tol.width_at(mid)`, or an exact zero if one is hit on the way.
pub fn bisect_root(f: impl Fn(f64) -> f64, br: Bracket, tol: Tolerance) -> Result<f64> {
    bisect_root_counted(f, br, tol).map(|(x, _, _)| x)
}

/// Same as [`bisect_root`] but also reports the final bracket width and the
/// number of iterations used.
pub(crate) fn bisect_root_counted(
    f: impl Fn(f64) -> f64,
    br: Bracket,
    tol: Tolerance,
) -> Result<(f64, f64, usize)> {
    let Bracket {
        mut lo,
        mut hi,
        f_lo,
        f_hi,
    } = Bracket::from_values(br.lo, br.hi, br.f_lo, br.f_hi)?;
    if f_lo == 0.0 {
        return Ok((lo, 0.0, 0));
    }
    if f_hi == 0.0 {
        return Ok((hi, 0.0, 0));
    }
    let lo_positive = f_lo > 0.0;
    for iter in 1..=tol.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if hi - lo <= tol.width_at(mid) || mid <= lo || mid >= hi {
            return Ok((mid, hi - lo, iter - 1));
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, 0.0, iter));
        }
        if fm.is_nan() {
            return Err(NumericsError::NonFinite(mid));
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = lo + 0.5 * (hi - lo);
    if hi - lo <= tol.width_at(mid) {
        Ok((mid, hi - lo, tol.max_iter))
    } else {
        Err(NumericsError::MaxIterExceeded(tol.max_iter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let f = |x: f64| x - 2.0;
        let x = bisect_root(f, Bracket::new(f, 0.0, 10.0).unwrap(), Tolerance::default()).unwrap();
        assert!((x - 2.0).abs() < 1e-9);
    }

    #[test]
    fn odd_symmetry_root_is_exact() {
        let f = |x: f64| x;
        let x = bisect_root(f, Bracket::new(f, -1.0, 1.0).unwrap(), Tolerance::default()).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn no_sign_change_is_reported() {
        let f = |x: f64| x * x + 1.0;
        assert!(matches!(
            Bracket::new(f, -1.0, 1.0),
            Err(NumericsError::NoSignChange { .. })
        ));
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let f = |x: f64| x - 0.3;
        let tol = Tolerance::new(1e-14, 1e-14, 5).unwrap();
        let br = Bracket::new(f, 0.0, 1.0).unwrap();
        assert_eq!(bisect_root(f, br, tol), Err(NumericsError::MaxIterExceeded(5)));
    }

    #[test]
    fn decreasing_function_and_result_inside_bracket() {
        let f = |x: f64| (-x).exp() - 0.25;
        let br = Bracket::new(f, 0.0, 5.0).unwrap();
        let x = bisect_root(f, br, Tolerance::default()).unwrap();
        assert!((0.0..=5.0).contains(&x));
        assert!((x - 4f64.ln()).abs() < 1e-9);
    }
}
