use super::{
    eb_relaxation_lcb, maurer_eb_lcb, wswrkm_lcb, BoundMethod, BoundResult,
    BoundSpec, ConfidenceError, Diagnostics, Result,
};
use crate::numerics::{root::bisect_root_counted, Bracket, Tolerance};
use crate::wealth::crp::crp_log_wealth_slice;
use crate::wealth::{pcrp_optimal_fraction, LbupState, SampleBuffer, UpDpState};

/// Smallest candidate mean tried, relative to the sample mean.
const U_MIN: f64 = 1e-250;
/// Largest candidate mean tried when the wealth still exceeds the threshold
/// at the sample mean, relative to the sample mean.
const U_MAX: f64 = 1e3;

/// Streaming state matching a bound method: raw samples, the UP table or the
/// LBUP power sums.
#[derive(Debug, Clone, PartialEq)]
pub enum Accumulator {
    Samples(SampleBuffer),
    Up(UpDpState),
    Lbup(LbupState),
}

impl Accumulator {
    pub fn for_method(method: BoundMethod) -> Result<Self> {
        method.validate()?;
        Ok(match method {
            BoundMethod::Up { prior } => Accumulator::Up(UpDpState::new(prior)),
            BoundMethod::Lbup { r } => Accumulator::Lbup(LbupState::new(r)?),
            _ => Accumulator::Samples(SampleBuffer::new()),
        })
    }

    pub fn from_slice(method: BoundMethod, ys: &[f64]) -> Result<Self> {
        let mut acc = Self::for_method(method)?;
        for &y in ys {
            acc.push(y)?;
        }
        Ok(acc)
    }

    pub fn push(&mut self, y: f64) -> Result<()> {
        match self {
            Accumulator::Samples(b) => b.push(y)?,
            Accumulator::Up(s) => s.push(y)?,
            Accumulator::Lbup(s) => s.push(y)?,
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        match self {
            Accumulator::Samples(b) => b.len(),
            Accumulator::Up(s) => s.n(),
            Accumulator::Lbup(s) => s.n(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        match self {
            Accumulator::Samples(b) => b.mean(),
            Accumulator::Up(s) => s.log_y()[1].exp() / n as f64,
            Accumulator::Lbup(s) => s.moments()[1] / n as f64,
        }
    }
}

/// Betting lower confidence bound: the smallest `ν` whose wealth stays below
/// `1/δ`.
///
/// The search runs on `u = ν / μ̂` so that rescaling the data rescales the
/// bound exactly. UP and pCRP★ wealths are decreasing in `ν` and the root is
/// bracketed by `[U_MIN, 1]`. The LBUP wealth vanishes again as `ν → 0`, so
/// the largest crossing below the sample mean is taken instead; every
/// smaller `ν` is rejected by the uniform-prior UP test that LBUP bounds
/// from below.
pub fn betting_lcb(acc: &Accumulator, spec: &BoundSpec) -> Result<BoundResult> {
    if acc.is_empty() {
        return Err(ConfidenceError::EmptySample);
    }
    let threshold = (1.0 / spec.delta).ln();
    let mean = acc.mean();
    match (spec.method, acc) {
        (BoundMethod::Up { prior }, Accumulator::Up(s)) if s.prior() == prior => {
            if !(mean > 0.0) {
                return Ok(BoundResult::zero(false));
            }
            let ev = s.evaluator()?;
            let f = |u: f64| ev.log_wealth(u * mean) - threshold;
            decreasing_root(f, mean)
        }
        (BoundMethod::PCrp, Accumulator::Samples(b)) => {
            if !(mean > 0.0) {
                return Ok(BoundResult::zero(false));
            }
            let ys = b.values();
            let n = ys.len() as f64;
            let penalty = -0.5 * (std::f64::consts::PI * (n + 1.0)).ln();
            let f = |u: f64| {
                let nu = u * mean;
                match pcrp_optimal_fraction(ys, nu) {
                    Ok(b) => penalty + crp_log_wealth_slice(ys, b, nu) - threshold,
                    Err(_) => f64::NAN,
                }
            };
            let mut res = decreasing_root(f, mean)?;
            if res.lcb > 0.0 {
                res.diagnostics.inner_b = pcrp_optimal_fraction(ys, res.lcb).ok();
            }
            Ok(res)
        }
        (BoundMethod::Lbup { r }, Accumulator::Lbup(s)) if s.r() == r => {
            if !(mean > 0.0) {
                return Ok(BoundResult::zero(false));
            }
            let f = |u: f64| match s.log_wealth(u * mean) {
                Ok(e) => e.log_wealth - threshold,
                Err(_) => f64::NAN,
            };
            largest_crossing(f, mean)
        }
        (BoundMethod::EbRelax, Accumulator::Samples(b)) => eb_relaxation_lcb(b.values(), spec.delta),
        (BoundMethod::MaurerEb, Accumulator::Samples(b)) => maurer_eb_lcb(b.values(), spec.delta),
        (BoundMethod::Wswrkm { .. }, Accumulator::Samples(b)) => wswrkm_lcb(b.values(), spec),
        (m, _) => Err(ConfidenceError::MismatchedAccumulator(m)),
    }
}

fn tolerance() -> Tolerance {
    Tolerance::default()
}

/// Upper end of the search in `u`, doubling past 1 while the wealth is still
/// above the threshold.
fn upper_end(f: &impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    let mut hi = 1.0;
    let mut f_hi = f(hi);
    while f_hi > 0.0 && hi < U_MAX {
        hi *= 2.0;
        f_hi = f(hi);
    }
    (f_hi <= 0.0).then_some((hi, f_hi))
}

fn bisect_cell(f: impl Fn(f64) -> f64, lo: f64, f_lo: f64, hi: f64, f_hi: f64, scale: f64) -> Result<BoundResult> {
    let br = Bracket::from_values(lo, hi, f_lo, f_hi)?;
    let (u, width, iters) = bisect_root_counted(f, br, tolerance())?;
    Ok(BoundResult {
        lcb: u * scale,
        converged: true,
        bracket_width: width * scale,
        diagnostics: Diagnostics {
            iterations: iters,
            ..Diagnostics::default()
        },
    })
}

fn decreasing_root(f: impl Fn(f64) -> f64, scale: f64) -> Result<BoundResult> {
    let Some((hi, f_hi)) = upper_end(&f) else {
        return Ok(BoundResult::zero(false));
    };
    let f_lo = f(U_MIN);
    if f_lo.is_nan() {
        return Err(crate::numerics::NumericsError::NonFinite(U_MIN * scale).into());
    }
    if f_lo <= 0.0 {
        return Ok(BoundResult::zero(false));
    }
    bisect_cell(f, U_MIN, f_lo, hi, f_hi, scale)
}

fn largest_crossing(f: impl Fn(f64) -> f64, scale: f64) -> Result<BoundResult> {
    let Some((mut hi, mut f_hi)) = upper_end(&f) else {
        return Ok(BoundResult::zero(false));
    };
    loop {
        let lo = 0.5 * hi;
        if lo < U_MIN {
            return Ok(BoundResult::zero(false));
        }
        let f_lo = f(lo);
        if f_lo.is_nan() {
            return Ok(BoundResult::zero(false));
        }
        if f_lo > 0.0 {
            return bisect_cell(f, lo, f_lo, hi, f_hi, scale);
        }
        hi = lo;
        f_hi = f_lo;
    }
}
