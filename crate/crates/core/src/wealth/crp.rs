use super::{check_nu, Result, SampleBuffer, WealthError};

/// Constant betting fraction of a rebalanced portfolio between cash and the
/// normalized observation `y / ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrpParams {
    b: f64,
}

impl CrpParams {
    pub fn new(b: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&b) {
            Ok(Self { b })
        } else {
            Err(WealthError::DomainError(format!("betting fraction must lie in [0, 1], got {b}")))
        }
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// `Σ_t ln(1 - b + b y_t / ν)`; `-inf` when `b = 1` meets a zero observation.
pub fn crp_log_wealth(buf: &SampleBuffer, p: CrpParams, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    Ok(crp_log_wealth_slice(buf.values(), p.b, nu))
}

pub(crate) fn crp_log_wealth_slice(ys: &[f64], b: f64, nu: f64) -> f64 {
    ys.iter().map(|&y| (b * (y / nu - 1.0)).ln_1p()).sum()
}
