//! Distribution families used to study the test under alternatives: the
//! tail-contamination family `F_{τ,δ}` built on a base law `G`, and the
//! normal location model. Also the almost-sure limit of `(n+m)·T` under a
//! fixed alternative.

use std::fmt::Debug;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal as NormalDraw};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, SimRng};
use crate::scalar::{normal_cdf, normal_quantile};
use crate::statistic::Sample;

/// A continuous distribution given by its distribution function and inverse.
pub trait BaseDistribution: Debug + Send + Sync {
    fn cdf(&self, x: f64) -> f64;
    fn inverse_cdf(&self, u: f64) -> f64;
}

/// Built-in base laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinBase {
    /// `U(0, 1)`.
    Uniform,
    /// `N(0, 1)`.
    Normal,
}

impl BaseDistribution for BuiltinBase {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            BuiltinBase::Uniform => x.clamp(0.0, 1.0),
            BuiltinBase::Normal => normal_cdf(x),
        }
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            BuiltinBase::Uniform => u.clamp(0.0, 1.0),
            BuiltinBase::Normal => normal_quantile(u),
        }
    }
}

/// `F(x) = δG(x)` for `x ≤ τ` and `β(G(x) − G(τ)) + δG(τ)` beyond, with
/// `β = (1 − δG(τ))/(1 − G(τ))` so that `F` is a distribution function.
#[derive(Debug, Clone)]
pub struct LowerTailFamily<G = BuiltinBase> {
    base: G,
    tau: f64,
    delta: f64,
    beta: f64,
    g_tau: f64,
}

impl<G: BaseDistribution> LowerTailFamily<G> {
    pub fn new(base: G, tau: f64, delta: f64) -> Result<Self> {
        if !(delta > 1.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must exceed 1, got {delta}"
            )));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidParameter("tau must be finite".into()));
        }
        let g_tau = base.cdf(tau);
        if !(g_tau > 0.0 && delta * g_tau < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < G(tau) and delta*G(tau) < 1 (G(tau)={g_tau}, delta={delta})"
            )));
        }
        let beta = (1.0 - delta * g_tau) / (1.0 - g_tau);
        debug_assert!(beta > 0.0 && beta < 1.0);
        Ok(Self {
            base,
            tau,
            delta,
            beta,
            g_tau,
        })
    }

    /// Places `τ` at the base quantile `G⁻¹(tau_quantile)`.
    pub fn from_quantile(base: G, tau_quantile: f64, delta: f64) -> Result<Self> {
        if !(tau_quantile > 0.0 && tau_quantile < 1.0) {
            return Err(Error::out_of_range(
                "tau quantile",
                format!("{tau_quantile} not in (0, 1)"),
            ));
        }
        let tau = base.inverse_cdf(tau_quantile);
        Self::new(base, tau, delta)
    }

    pub fn base(&self) -> &G {
        &self.base
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let g = self.base.cdf(x);
        if x <= self.tau {
            self.delta * g
        } else {
            (self.beta * (g - self.g_tau) + self.delta * self.g_tau).min(1.0)
        }
    }

    /// `D(x) = F(x) − G(x)`.
    pub fn difference(&self, x: f64) -> f64 {
        self.cdf(x) - self.base.cdf(x)
    }

    /// `D(τ) = (δ − β)·G(τ)·(1 − G(τ))`, the maximum of `D`.
    pub fn max_difference(&self) -> f64 {
        (self.delta - self.beta) * self.g_tau * (1.0 - self.g_tau)
    }

    /// Piecewise inverse of `F`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let knee = self.delta * self.g_tau;
        if u <= knee {
            self.base.inverse_cdf(u / self.delta)
        } else {
            self.base.inverse_cdf((u - knee) / self.beta + self.g_tau)
        }
    }

    pub fn draw(&self, rng: &mut impl Rng, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| self.inverse_cdf(rng.random::<f64>()))
            .collect()
    }

    /// `count` i.i.d. draws from `F` as the X sample.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Sample> {
        let mut rng = stream_rng(seed, &[]);
        Sample::x(self.draw(&mut rng, count))
    }
}

/// `X ~ N(−shift, 1)`, `Y ~ N(0, 1)`; so `F(x) = Φ(x + shift)` and `F ≥ G`
/// for `shift ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalShiftModel {
    pub shift: f64,
}

impl Default for NormalShiftModel {
    fn default() -> Self {
        Self { shift: 0.4 }
    }
}

impl NormalShiftModel {
    pub fn new(shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::InvalidParameter("shift must be finite".into()));
        }
        Ok(Self { shift })
    }

    pub fn x_cdf(&self, x: f64) -> f64 {
        normal_cdf(x + self.shift)
    }

    pub fn y_cdf(&self, x: f64) -> f64 {
        normal_cdf(x)
    }

    pub fn draw(&self, rng: &mut SimRng, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        let x = (0..n)
            .map(|_| {
                let z: f64 = NormalDraw.sample(rng);
                z - self.shift
            })
            .collect::<Vec<f64>>();
        let y = (0..m).map(|_| NormalDraw.sample(rng)).collect();
        (x, y)
    }

    pub fn sample(&self, n: usize, m: usize, seed: u64) -> Result<(Sample, Sample)> {
        let mut rng = stream_rng(seed, &[]);
        let (x, y) = self.draw(&mut rng, n, m);
        Ok((Sample::x(x)?, Sample::y(y)?))
    }
}

/// Almost-sure limit of `(n+m)·T` when `F − G ≥ 0` is maximized at `τ`:
/// `(F(τ) − G(τ))/√(H(τ)(1 − H(τ)))` with `H = λF + (1 − λ)G`.
pub fn h1_limit_diagnostic(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    tau: f64,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::out_of_range(
            "lambda",
            format!("{lambda} not in (0, 1)"),
        ));
    }
    let (f_tau, g_tau) = (f(tau), g(tau));
    if f_tau <= g_tau {
        return Err(Error::InvalidParameter(format!(
            "F(tau)={f_tau} must exceed G(tau)={g_tau}"
        )));
    }
    let h = lambda * f_tau + (1.0 - lambda) * g_tau;
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::out_of_range("H(tau)", format!("{h} not in (0, 1)")));
    }
    Ok((f_tau - g_tau) / (h * (1.0 - h)).sqrt())
}
