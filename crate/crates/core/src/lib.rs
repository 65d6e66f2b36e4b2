//! The V-test: a nonparametric two-sample test built on the transform
//! `T = D/√(R(n+m−R))` of the Vincze statistic `(R, D)`.
//!
//! Exact null distributions are computed in rational arithmetic
//! ([`exact_null`]); limit laws are generic over the floating-point scalar
//! ([`asymptotic`]).

pub mod alternatives;
pub mod asymptotic;
pub mod cache;
pub mod ecdf;
pub mod error;
pub mod exact;
pub mod exact_null;
pub mod montecarlo;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod statistic;

pub use error::{Error, Result};
pub use scalar::Real;

/// Exact arbitrary-precision rational, the carrier of every exact probability.
pub type Rational = num_rational::BigRational;
/// Arbitrary-precision integer.
pub type Integer = num_bigint::BigInt;

/// Series control in double precision.
pub type SeriesControl64 = asymptotic::SeriesControl<f64>;
/// Series control in single precision.
pub type SeriesControl32 = asymptotic::SeriesControl<f32>;
