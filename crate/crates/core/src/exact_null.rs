//! Exact null distribution of the Vincze statistic `(R, D)` for `m = n·p`,
//! the step distribution function `J` of `T`, exact p-values and critical
//! values, and the exact Smirnov tail for equal sample sizes.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{binom, binom_signed, floor_sqrt_scaled, lcm_upto, BinomialTable};
use crate::Rational;

fn check_sizes(n: u64, p: u64) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter(format!(
            "sample sizes must be positive (n={n}, p={p})"
        )));
    }
    Ok(())
}

/// Splits `m` into `p = m/n`, failing when `m` is not a multiple of `n`.
pub fn ratio(n: u64, m: u64) -> Result<u64> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "sample sizes must be positive (n={n}, m={m})"
        )));
    }
    if !m.is_multiple_of(n) {
        return Err(Error::UnsupportedSampleRatio { n, m });
    }
    Ok(m / n)
}

/// `s = (r+k)·n/(n+m)` when the pair satisfies the admissibility condition
/// (`s` a nonnegative integer with `s ≤ min(r, n)`).
fn admissible_s(n: u64, m: u64, r: u64, k: u64) -> Option<u64> {
    let total = n + m;
    let scaled = (r + k) * n;
    if !scaled.is_multiple_of(total) {
        return None;
    }
    let s = scaled / total;
    (s <= r.min(n)).then_some(s)
}

fn check_cell(n: u64, m: u64, r: u64, k: u64) -> Result<()> {
    if r < 1 || r > n + m {
        return Err(Error::out_of_range(
            "r",
            format!("{r} not in 1..={}", n + m),
        ));
    }
    if k > m {
        return Err(Error::out_of_range("k", format!("{k} not in 0..={m}")));
    }
    Ok(())
}

/// `P(R = r, D = k/m)` under the null, evaluated directly in rationals.
///
/// Summands whose denominator `a = r+k−1−j(n+m)/n` vanishes are rewritten
/// with `binom(a, b)/a = binom(a−1, b−1)/b`. When `b = s−1−j = 0` the
/// denominator is always `a = p`, so the singular case cannot occur.
pub fn gutjahr_pmf(n: u64, p: u64, r: u64, k: u64) -> Result<Rational> {
    check_sizes(n, p)?;
    let m = n * p;
    check_cell(n, m, r, k)?;
    let Some(s) = admissible_s(n, m, r, k) else {
        return Ok(Rational::zero());
    };
    let total = n + m;
    let q = (p + 1) as i64;
    let (ri, ki, si) = (r as i64, k as i64, s as i64);

    let lead = Rational::new(binom((total - r + 1) as i64, n - s), binom(total as i64, n))
        * Rational::new(BigInt::from(k + 1), BigInt::from(total - r + 1));

    let mut sum = Rational::zero();
    for j in 0..=(n * k / total) as i64 {
        let a = ri + ki - 1 - j * q;
        let b = si - 1 - j;
        if b < 0 {
            continue;
        }
        let c = binom_signed(j * q - ki, j);
        if c.is_zero() {
            continue;
        }
        let term = if b >= 1 {
            Rational::new(c * binom_signed(a - 1, b - 1) * p, BigInt::from(b))
        } else {
            debug_assert_eq!(a, p as i64);
            Rational::new(c * p, BigInt::from(a))
        };
        sum += term;
    }
    Ok(lead * sum)
}

/// Same as [`gutjahr_pmf`] but taking `m` directly.
pub fn gutjahr_pmf_for_sizes(n: u64, m: u64, r: u64, k: u64) -> Result<Rational> {
    gutjahr_pmf(n, ratio(n, m)?, r, k)
}

/// Integer-only evaluation of the formula for whole tables: every
/// probability times `binom(n+m, n)` is a sequence count.
struct CountEvaluator {
    n: u64,
    p: u64,
    binoms: BinomialTable,
    lcm: BigInt,
    lcm_over: Vec<BigInt>,
}

impl CountEvaluator {
    fn new(n: u64, p: u64) -> Self {
        let total = n + n * p;
        let lcm = lcm_upto(n);
        let lcm_over = (0..=n)
            .map(|b| if b == 0 { BigInt::zero() } else { &lcm / b })
            .collect();
        Self {
            n,
            p,
            binoms: BinomialTable::new(total as usize + 1),
            lcm,
            lcm_over,
        }
    }

    fn count(&self, r: u64, k: u64) -> BigInt {
        let (n, p) = (self.n, self.p);
        let m = n * p;
        let total = n + m;
        let Some(s) = admissible_s(n, m, r, k) else {
            return BigInt::zero();
        };
        let q = (p + 1) as i64;
        let (ri, ki, si) = (r as i64, k as i64, s as i64);
        let mut sum = BigInt::zero();
        for j in 0..=(n * k / total) as i64 {
            let b = si - 1 - j;
            if b < 0 {
                break;
            }
            let c = self.binoms.get(j * q - ki, j);
            if c.is_zero() {
                continue;
            }
            if b >= 1 {
                let a = ri + ki - 1 - j * q;
                sum += c * self.binoms.get(a - 1, b - 1) * p * &self.lcm_over[b as usize];
            } else {
                sum += c * &self.lcm;
            }
        }
        let numer = self.binoms.get((total - r + 1) as i64, (n - s) as i64) * (k + 1) * sum;
        let denom = &self.lcm * (total - r + 1);
        let (quot, rem) = numer.div_rem(&denom);
        assert!(
            rem.is_zero(),
            "non-integral sequence count at n={n} p={p} r={r} k={k}"
        );
        quot
    }
}

/// One distinct value of `T` with the probability mass it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    pub t_squared: Rational,
    /// `(√(nm(n+m))·T)²`.
    pub scaled_squared: Rational,
    pub scaled: f64,
    /// `(r, k)` cells that map to this value.
    pub pairs: Vec<(u64, u64)>,
    /// Number of label sequences with this value.
    pub mass: BigInt,
    /// Number of label sequences with `T` at most this value.
    pub cumulative: BigInt,
}

/// Which strictness the upper tail uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// `P(T > t) = 1 − J(t)`.
    #[default]
    Greater,
    /// `P(T ≥ t)`.
    GreaterOrEqual,
}

/// Rejection threshold for the scaled statistic at level `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValue {
    pub t_squared: Rational,
    pub scaled_squared: Rational,
    pub scaled: f64,
    /// Exact `P(T > c)`, at most `alpha`.
    pub attained_size: Rational,
}

impl CriticalValue {
    /// Rejects when the observed `T²` exceeds the threshold.
    pub fn rejects(&self, t_squared: &Rational) -> bool {
        t_squared > &self.t_squared
    }
}

/// Joint null pmf of `(R, D)` for `m = n·p`, stored as sequence counts over
/// `binom(n+m, n)`, with the derived support of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactNullTable {
    n: u64,
    p: u64,
    total: BigInt,
    cells: BTreeMap<(u64, u64), BigInt>,
    support: Vec<SupportPoint>,
}

impl ExactNullTable {
    /// Evaluates every cell of `{1..n+m} × {0..m}`.
    pub fn build(n: u64, p: u64) -> Result<Self> {
        check_sizes(n, p)?;
        let m = n * p;
        let total_len = n + m;
        let eval = CountEvaluator::new(n, p);
        let cells: Vec<((u64, u64), BigInt)> = (1..=total_len)
            .into_par_iter()
            .flat_map_iter(|r| {
                let eval = &eval;
                (0..=m).filter_map(move |k| {
                    let c = eval.count(r, k);
                    (!c.is_zero()).then_some(((r, k), c))
                })
            })
            .collect();
        Self::from_counts(n, p, cells.into_iter().collect())
    }

    pub fn build_for_sizes(n: u64, m: u64) -> Result<Self> {
        Self::build(n, ratio(n, m)?)
    }

    /// Assembles a table from precomputed sequence counts.
    pub fn from_counts(n: u64, p: u64, cells: BTreeMap<(u64, u64), BigInt>) -> Result<Self> {
        check_sizes(n, p)?;
        let m = n * p;
        let total_len = n + m;
        for &(r, k) in cells.keys() {
            check_cell(n, m, r, k)?;
        }
        let total = binom(total_len as i64, n);

        // Sort by T² = k²/(m²·r·(N−r)) with exact cross-multiplication.
        let key = |r: u64, k: u64| -> (u128, u128) {
            if r == total_len || k == 0 {
                (0, 1)
            } else {
                let m = m as u128;
                (
                    (k as u128).pow(2),
                    m * m * r as u128 * (total_len - r) as u128,
                )
            }
        };
        let cmp = |a: (u128, u128), b: (u128, u128)| -> Ordering {
            match (a.0.checked_mul(b.1), b.0.checked_mul(a.1)) {
                (Some(x), Some(y)) => x.cmp(&y),
                _ => (BigInt::from(a.0) * b.1).cmp(&(BigInt::from(b.0) * a.1)),
            }
        };
        let mut order: Vec<_> = cells
            .iter()
            .map(|(&(r, k), c)| (key(r, k), (r, k), c))
            .collect();
        order.sort_by(|a, b| cmp(a.0, b.0).then(a.1.cmp(&b.1)));

        let scale = BigInt::from(n) * m * total_len;
        let mut support: Vec<SupportPoint> = Vec::new();
        let mut running = BigInt::zero();
        let mut last_key: Option<(u128, u128)> = None;
        for (kv, pair, count) in order {
            running += count;
            match last_key {
                Some(prev) if cmp(prev, kv) == Ordering::Equal => {
                    let pt = support.last_mut().expect("non-empty");
                    pt.pairs.push(pair);
                    pt.mass += count;
                    pt.cumulative = running.clone();
                }
                _ => {
                    let t_squared = Rational::new(kv.0.into(), kv.1.into());
                    let scaled_squared = &t_squared * Rational::from_integer(scale.clone());
                    let scaled = scaled_squared.to_f64().unwrap_or(f64::INFINITY).sqrt();
                    support.push(SupportPoint {
                        t_squared,
                        scaled_squared,
                        scaled,
                        pairs: vec![pair],
                        mass: count.clone(),
                        cumulative: running.clone(),
                    });
                    last_key = Some(kv);
                }
            }
        }
        Ok(Self {
            n,
            p,
            total,
            cells,
            support,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u64 {
        self.n * self.p
    }

    /// `binom(n+m, n)`, the common denominator of every probability.
    pub fn total_sequences(&self) -> &BigInt {
        &self.total
    }

    /// Nonzero cells as `((r, k), count)`.
    pub fn counts(&self) -> &BTreeMap<(u64, u64), BigInt> {
        &self.cells
    }

    pub fn pmf(&self, r: u64, k: u64) -> Rational {
        self.cells
            .get(&(r, k))
            .map(|c| Rational::new(c.clone(), self.total.clone()))
            .unwrap_or_else(Rational::zero)
    }

    pub fn pmf_map(&self) -> BTreeMap<(u64, u64), Rational> {
        self.cells
            .iter()
            .map(|(&rk, c)| (rk, Rational::new(c.clone(), self.total.clone())))
            .collect()
    }

    /// `Σ pmf`; exactly one for a correct table.
    pub fn total_mass(&self) -> Rational {
        let sum: BigInt = self.cells.values().sum();
        Rational::new(sum, self.total.clone())
    }

    /// `P(R = r)`.
    pub fn prob_r(&self, r: u64) -> Rational {
        let sum: BigInt = self
            .cells
            .range((r, 0)..=(r, u64::MAX))
            .map(|(_, c)| c)
            .sum();
        Rational::new(sum, self.total.clone())
    }

    pub fn support(&self) -> &[SupportPoint] {
        &self.support
    }

    fn cumulative_upto(&self, idx: usize) -> Rational {
        if idx == 0 {
            Rational::zero()
        } else {
            Rational::new(self.support[idx - 1].cumulative.clone(), self.total.clone())
        }
    }

    /// `J(t) = P(T² ≤ t²)` for `T²` given exactly.
    pub fn cdf_t_squared(&self, t_squared: &Rational) -> Rational {
        if t_squared.is_negative() {
            return Rational::zero();
        }
        let idx = self.support.partition_point(|s| &s.t_squared <= t_squared);
        self.cumulative_upto(idx)
    }

    /// `J(x) = P(T ≤ x)`; zero for negative `x`.
    pub fn cdf(&self, x: &Rational) -> Rational {
        if x.is_negative() {
            return Rational::zero();
        }
        self.cdf_t_squared(&(x * x))
    }

    /// `J` evaluated cell by cell: all `k ≤ [κ(r)·x] ∧ m` for each
    /// `r < n+m`, plus the atom at `r = n+m`. Agrees with [`Self::cdf`].
    pub fn cdf_by_cells(&self, x: &Rational) -> Rational {
        if x.is_negative() {
            return Rational::zero();
        }
        let m = self.m();
        let total_len = self.n + m;
        let mut count = BigInt::zero();
        for r in 1..total_len {
            let upper = floor_sqrt_scaled(m, r, total_len, x).min(BigInt::from(m));
            let upper = upper.to_u64().expect("bounded by m");
            count += self
                .cells
                .range((r, 0)..=(r, upper))
                .map(|(_, c)| c)
                .sum::<BigInt>();
        }
        let atom = Rational::new(BigInt::from(m), BigInt::from(total_len) * (total_len - 1));
        Rational::new(count, self.total.clone()) + atom
    }

    /// `P(√(nm(n+m))·T ≤ x)` with `x` taken as its exact binary value.
    pub fn cdf_scaled(&self, x: f64) -> Rational {
        if x.is_nan() || x < 0.0 {
            return Rational::zero();
        }
        if x.is_infinite() {
            return Rational::one();
        }
        let xr = Rational::from_float(x).expect("finite");
        let x2 = &xr * &xr;
        let idx = self.support.partition_point(|s| s.scaled_squared <= x2);
        self.cumulative_upto(idx)
    }

    /// Upper-tail probability of an observed `T²`.
    pub fn p_value(&self, t_squared: &Rational, tail: Tail) -> Rational {
        let below = match tail {
            Tail::Greater => self.cdf_t_squared(t_squared),
            Tail::GreaterOrEqual => {
                let idx = self.support.partition_point(|s| &s.t_squared < t_squared);
                self.cumulative_upto(idx)
            }
        };
        Rational::one() - below
    }

    /// Smallest support point `c` of the scaled statistic with
    /// `P(scaled T > c) ≤ alpha`.
    pub fn critical_value(&self, alpha: &Rational) -> Result<CriticalValue> {
        if !(alpha.is_positive() && alpha < &Rational::one()) {
            return Err(Error::out_of_range("alpha", "must lie in (0, 1)"));
        }
        for (i, pt) in self.support.iter().enumerate() {
            let size = Rational::one() - self.cumulative_upto(i + 1);
            if &size <= alpha {
                return Ok(CriticalValue {
                    t_squared: pt.t_squared.clone(),
                    scaled_squared: pt.scaled_squared.clone(),
                    scaled: pt.scaled,
                    attained_size: size,
                });
            }
        }
        unreachable!("the largest support point has size zero")
    }

    /// `E[1 − J(T)]` under the null, i.e. `(1 − Σ P(T = t)²)/2`.
    pub fn null_mean_p_value(&self) -> Rational {
        let sq: BigInt = self.support.iter().map(|s| &s.mass * &s.mass).sum();
        let total = self.total_sequences();
        (Rational::one() - Rational::new(sq, total * total)) / Rational::from_integer(2.into())
    }
}

/// `L_n(x) = P(D_nn > x) = binom(2n, n+[nx]+1)/binom(2n, n)` for equal
/// sample sizes.
pub fn smirnov_exact_tail(n: u64, x: &Rational) -> Rational {
    if x.is_negative() {
        return Rational::one();
    }
    let nx = (x * Rational::from_integer(n.into())).floor().to_integer();
    let idx: BigInt = BigInt::from(n) + nx + 1;
    match idx.to_u64() {
        Some(i) if i <= 2 * n => Rational::new(binom(2 * n as i64, i), binom(2 * n as i64, n)),
        _ => Rational::zero(),
    }
}

/// Precomputed `L_n` at the lattice points `D = k/n`.
#[derive(Debug, Clone)]
pub struct SmirnovTail {
    n: u64,
    /// `tails[k] = P(D > k/n)`.
    tails: Vec<Rational>,
}

impl SmirnovTail {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        let binoms = BinomialTable::new(2 * n as usize);
        let denom = binoms.get(2 * n as i64, n as i64);
        let tails = (0..=n)
            .map(|k| Rational::new(binoms.get(2 * n as i64, (n + k + 1) as i64), denom.clone()))
            .collect();
        Ok(Self { n, tails })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `P(D > k/n)`.
    pub fn tail_at(&self, k: u64) -> Rational {
        self.tails
            .get(k as usize)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Smallest `k` with `P(D > k/n) ≤ alpha`; reject when `D > k/n`.
    pub fn critical_k(&self, alpha: &Rational) -> Result<u64> {
        if !(alpha.is_positive() && alpha < &Rational::one()) {
            return Err(Error::out_of_range("alpha", "must lie in (0, 1)"));
        }
        Ok(self
            .tails
            .iter()
            .position(|t| t <= alpha)
            .expect("tail at k = n is zero") as u64)
    }

    /// `E[L_n(D)]` under the null.
    pub fn null_mean_p_value(&self) -> Rational {
        let mut above = Rational::one();
        let mut mean = Rational::zero();
        for tail in &self.tails {
            mean += (&above - tail) * tail;
            above = tail.clone();
        }
        mean
    }
}
