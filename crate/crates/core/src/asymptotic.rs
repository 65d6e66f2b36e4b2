//! Limit distributions of the scaled statistic `√(nm(n+m))·T`: the
//! Maxwell-Boltzmann law `K` (one-sided), the series law `K*` (two-sided),
//! and the Smirnov limit `1 − exp(−2x²)`.

use crate::error::{Error, Result};
use crate::scalar::{normal_cdf, normal_pdf, normal_sf, Real};

/// `√(2/π)`.
fn sqrt_2_over_pi<F: Real>() -> F {
    F::FRAC_2_SQRT_PI() * F::FRAC_1_SQRT_2()
}

/// Maxwell-Boltzmann distribution function
/// `K(x) = 2Φ(x) − √(2/π)·x·exp(−x²/2) − 1`, zero for `x < 0`.
pub fn maxwell_cdf<F: Real>(x: F) -> F {
    if x.is_nan() {
        return x;
    }
    if x <= F::zero() {
        return F::zero();
    }
    if x > F::lit(1.0) {
        return F::one() - maxwell_sf(x);
    }
    let two = F::lit(2.0);
    // 2Φ(x) − 1 = 1 − 2Q(x); keep the small-x form free of cancellation
    // against 1 by using erf directly.
    let erf = F::one() - (x * F::FRAC_1_SQRT_2()).erfc();
    let v = erf - sqrt_2_over_pi::<F>() * x * (-(x * x) / two).exp();
    v.max(F::zero())
}

/// Upper tail `1 − K(x) = 2(1 − Φ(x)) + √(2/π)·x·exp(−x²/2)`.
pub fn maxwell_sf<F: Real>(x: F) -> F {
    if x <= F::zero() {
        return F::one();
    }
    let two = F::lit(2.0);
    (two * normal_sf(x) + two * x * normal_pdf(x)).min(F::one())
}

/// Density `√(2/π)·x²·exp(−x²/2)`.
pub fn maxwell_pdf<F: Real>(x: F) -> F {
    if x <= F::zero() {
        return F::zero();
    }
    sqrt_2_over_pi::<F>() * x * x * (-(x * x) / F::lit(2.0)).exp()
}

/// Bisection on a bracket for a nondecreasing distribution function.
fn invert<F: Real>(cdf: impl Fn(F) -> F, q: F, lo: F, hi: F) -> F {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = (lo + hi) / F::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / F::lit(2.0)
}

fn check_probability<F: Real>(q: F) -> Result<()> {
    if !(q > F::zero() && q < F::one()) {
        return Err(Error::out_of_range(
            "q",
            format!("{:?} must lie strictly between 0 and 1", q),
        ));
    }
    Ok(())
}

/// Inverse of [`maxwell_cdf`] on `[0, 10]`.
pub fn maxwell_quantile<F: Real>(q: F) -> Result<F> {
    check_probability(q)?;
    Ok(invert(maxwell_cdf, q, F::zero(), F::lit(10.0)))
}

/// Truncation control for the two-sided series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl<F> {
    pub abs_tol: F,
    pub max_index: usize,
}

impl<F: Real> Default for SeriesControl<F> {
    fn default() -> Self {
        Self {
            abs_tol: F::lit(1e-12),
            max_index: 200,
        }
    }
}

impl<F: Real> SeriesControl<F> {
    pub fn new(abs_tol: F, max_index: usize) -> Result<Self> {
        if abs_tol.is_nan() || abs_tol <= F::zero() || max_index < 1 {
            return Err(Error::InvalidParameter(
                "series control needs abs_tol > 0 and max_index ≥ 1".into(),
            ));
        }
        Ok(Self { abs_tol, max_index })
    }
}

/// Below this the two-sided law is treated as zero.
const TWO_SIDED_ZERO_BELOW: f64 = 1e-3;

/// Where the evaluation switches from the small-`x` theta series to the
/// Gaussian-decay series.
const TWO_SIDED_SWITCH: f64 = 1.0;

/// `1 − K*(x) = 4x·Σ_{j≥0} φ((2j+1)x)`, truncated once the remaining terms
/// are provably below `ctl.abs_tol`.
fn two_sided_sf_direct<F: Real>(x: F, ctl: &SeriesControl<F>) -> Result<F> {
    let four_x = F::lit(4.0) * x;
    let x2 = x * x;
    let mut sum = F::zero();
    let mut bound = F::infinity();
    for j in 0..ctl.max_index {
        let alpha = F::count(2 * j as u64 + 1);
        sum = sum + normal_pdf(alpha * x);
        // Consecutive-term ratio at j+1 is exp(−4x²(j+2)) and decreasing,
        // so the tail is dominated by a geometric series.
        let next = normal_pdf(F::count(2 * j as u64 + 3) * x);
        let ratio = (-F::lit(4.0) * x2 * F::count(j as u64 + 2)).exp();
        bound = four_x * next / (F::one() - ratio);
        if bound < ctl.abs_tol {
            return Ok((four_x * sum).min(F::one()));
        }
    }
    Err(Error::Truncation {
        max_index: ctl.max_index,
        bound: bound.to_f64().unwrap_or(f64::NAN),
    })
}

/// `K*(x) = 2·Σ_{k≥1} exp(−π²k²/(2x²)) − 4·Σ_{k≥1} exp(−2π²k²/x²)`, the
/// Poisson-summation dual of the direct series, fast for small `x`.
fn two_sided_cdf_theta<F: Real>(x: F, ctl: &SeriesControl<F>) -> Result<F> {
    let pi2 = F::PI() * F::PI();
    let c = pi2 / (F::lit(2.0) * x * x);
    let mut sum = F::zero();
    let mut bound = F::infinity();
    for k in 1..=ctl.max_index {
        let k2 = F::count((k * k) as u64);
        let a = (-c * k2).exp();
        let b = (-F::lit(4.0) * c * k2).exp();
        sum = sum + F::lit(2.0) * a - F::lit(4.0) * b;
        // Remaining terms are dominated by 2·exp(−c(k+1)²)/(1 − exp(−c)).
        let next = (-c * F::count(((k + 1) * (k + 1)) as u64)).exp();
        bound = F::lit(2.0) * next / (F::one() - (-c).exp());
        if bound < ctl.abs_tol {
            return Ok(sum.max(F::zero()).min(F::one()));
        }
    }
    Err(Error::Truncation {
        max_index: ctl.max_index,
        bound: bound.to_f64().unwrap_or(f64::NAN),
    })
}

/// Limit distribution function `K*` of the two-sided scaled statistic.
///
/// The double series over `α_j = 2j+1` only converges conditionally in the
/// order it is usually written; regrouping it by `j` collapses every
/// off-diagonal weight to `−1/4` and leaves `1 − 4x·Σ φ(α_j x)`, whose
/// terms decay like `exp(−α_j² x²/2)`. Small `x` uses the dual theta form.
pub fn two_sided_cdf<F: Real>(x: F, ctl: &SeriesControl<F>) -> Result<F> {
    if x.is_nan() {
        return Ok(x);
    }
    if x < F::lit(TWO_SIDED_ZERO_BELOW) {
        return Ok(F::zero());
    }
    if x.is_infinite() {
        return Ok(F::one());
    }
    if x < F::lit(TWO_SIDED_SWITCH) {
        two_sided_cdf_theta(x, ctl)
    } else {
        Ok(F::one() - two_sided_sf_direct(x, ctl)?)
    }
}

/// Upper tail `1 − K*(x)`, computed without cancellation for large `x`.
pub fn two_sided_sf<F: Real>(x: F, ctl: &SeriesControl<F>) -> Result<F> {
    if x < F::lit(TWO_SIDED_SWITCH) {
        Ok(F::one() - two_sided_cdf(x, ctl)?)
    } else {
        two_sided_sf_direct(x, ctl)
    }
}

/// Inverse of [`two_sided_cdf`] on `[0, 10]`.
pub fn two_sided_quantile<F: Real>(q: F, ctl: &SeriesControl<F>) -> Result<F> {
    check_probability(q)?;
    // Surface truncation problems before bisecting.
    two_sided_cdf(F::lit(TWO_SIDED_SWITCH), ctl)?;
    Ok(invert(
        |x| two_sided_cdf(x, ctl).unwrap_or(F::zero()),
        q,
        F::zero(),
        F::lit(10.0),
    ))
}

/// Smirnov limit `P(√(n/2)·D_nn ≤ x) → 1 − exp(−2x²)` for equal sample
/// sizes; zero for negative `x`.
pub fn smirnov_asymptotic_cdf<F: Real>(x: F) -> F {
    if x <= F::zero() {
        return F::zero();
    }
    F::one() - (-F::lit(2.0) * x * x).exp()
}

/// `exp(−2x²)`, the asymptotic Smirnov upper tail.
pub fn smirnov_asymptotic_sf<F: Real>(x: F) -> F {
    if x <= F::zero() {
        return F::one();
    }
    (-F::lit(2.0) * x * x).exp()
}

/// Standard normal distribution function, re-exported for callers that
/// build on these laws.
pub fn phi<F: Real>(x: F) -> F {
    normal_cdf(x)
}
