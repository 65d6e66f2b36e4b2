//! Floating-point scalar abstraction for the asymptotic side of the crate.
//!
//! Everything exact lives on [`crate::Rational`]; everything continuous is
//! written against [`Real`] so it can run in `f32` or `f64`.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar usable by the limit distributions and statistic scaling.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Converts an `f64` literal. Never fails for the IEEE types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts an unsigned count.
    #[inline]
    fn count(x: u64) -> Self {
        Self::from_u64(x).expect("count representable")
    }
}

impl Real for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Standard normal distribution function.
///
/// Evaluated as `erfc(-x/√2)/2`; the musl-derived `erfc` is accurate to
/// about 1 ulp, so the absolute error is far below 1e-14 in `f64`.
#[inline]
pub fn normal_cdf<F: Real>(x: F) -> F {
    F::lit(0.5) * (-x * F::FRAC_1_SQRT_2()).erfc()
}

/// Upper tail `1 - Φ(x)` without cancellation.
#[inline]
pub fn normal_sf<F: Real>(x: F) -> F {
    F::lit(0.5) * (x * F::FRAC_1_SQRT_2()).erfc()
}

/// Standard normal density.
#[inline]
pub fn normal_pdf<F: Real>(x: F) -> F {
    let inv_sqrt_2pi = F::FRAC_1_SQRT_2() * F::FRAC_2_SQRT_PI() * F::lit(0.5);
    inv_sqrt_2pi * (-(x * x) * F::lit(0.5)).exp()
}

/// Standard normal quantile.
///
/// Acklam's rational approximation followed by one Halley step against
/// [`normal_cdf`], which brings it to full double precision.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement; use the upper tail for p > 1/2 to keep precision.
    let e = if p > 0.5 {
        (1.0 - p) - normal_sf(x)
    } else {
        normal_cdf(x) - p
    };
    let u = e / normal_pdf(x);
    x - u / (1.0 + x * u / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        // Φ(1) and Φ(-2) to 16 digits.
        assert!((normal_cdf(1.0_f64) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-2.0_f64) - 0.022_750_131_948_179_21).abs() < 1e-16);
        assert_eq!(normal_cdf(0.0_f64), 0.5);
        assert!((normal_cdf(1.0_f32) - 0.841_344_8).abs() < 1e-6);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-4, 0.01, 0.2, 0.5, 0.7, 0.975, 0.9999, 1.0 - 1e-9] {
            let x = normal_quantile(p);
            let back = if p > 0.5 {
                1.0 - normal_sf(x)
            } else {
                normal_cdf(x)
            };
            assert!(
                (back - p).abs() <= 1e-15 * p.max(1e-3),
                "p={p} x={x} back={back}"
            );
        }
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-13);
    }
}
