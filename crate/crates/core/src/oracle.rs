//! Ground truth that does not share code paths with the closed-form
//! distributions: exhaustive enumeration of label sequences, and simulation
//! of the Brownian-bridge functionals that the scaled statistic converges to.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::binom;
use crate::exact_null::{gutjahr_pmf, ExactNullTable};
use crate::rng::stream_rng;
use crate::statistic::{vincze, LabelSequence, Sided};
use crate::Rational;

/// Default cap on the number of sequences [`enumerate_null`] will visit.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Exact null law of `(R, D)` obtained by visiting every label sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumeratedNull {
    pub n: u64,
    pub m: u64,
    pub sided: Sided,
    /// `(r, path_max) → number of sequences`, with `D = path_max/(nm)`.
    counts: BTreeMap<(u64, u64), u64>,
    total_sequences: u64,
}

impl EnumeratedNull {
    pub fn total_sequences(&self) -> u64 {
        self.total_sequences
    }

    pub fn counts(&self) -> &BTreeMap<(u64, u64), u64> {
        &self.counts
    }

    fn prob(&self, count: u64) -> Rational {
        Rational::new(count.into(), self.total_sequences.into())
    }

    /// `(r, D) → P(R = r, D)`.
    pub fn pmf(&self) -> BTreeMap<(u64, Rational), Rational> {
        let nm = BigInt::from(self.n) * self.m;
        self.counts
            .iter()
            .map(|(&(r, c), &cnt)| ((r, Rational::new(c.into(), nm.clone())), self.prob(cnt)))
            .collect()
    }

    /// `(r, k) → P(R = r, D = k/m)`; `None` if some attained `D` is not a
    /// multiple of `1/m`.
    pub fn pmf_rk(&self) -> Option<BTreeMap<(u64, u64), Rational>> {
        self.counts
            .iter()
            .map(|(&(r, c), &cnt)| (c % self.n == 0).then(|| ((r, c / self.n), self.prob(cnt))))
            .collect()
    }

    pub fn total_mass(&self) -> Rational {
        self.prob(self.counts.values().sum())
    }

    /// `P(R = r)`.
    pub fn prob_r(&self, r: u64) -> Rational {
        self.prob(
            self.counts
                .range((r, 0)..=(r, u64::MAX))
                .map(|(_, &c)| c)
                .sum(),
        )
    }

    /// `P(D > x)`.
    pub fn prob_d_greater(&self, x: &Rational) -> Rational {
        let nm = BigInt::from(self.n) * self.m;
        let count = self
            .counts
            .iter()
            .filter(|(&(_, c), _)| &Rational::new(c.into(), nm.clone()) > x)
            .map(|(_, &cnt)| cnt)
            .sum();
        self.prob(count)
    }

    /// Distribution of `T²` as `value → probability`.
    pub fn t_squared_pmf(&self) -> BTreeMap<Rational, Rational> {
        let (n, m) = (self.n, self.m);
        let total = n + m;
        let nm = BigInt::from(n) * m;
        let mut out: BTreeMap<Rational, u64> = BTreeMap::new();
        for (&(r, c), &cnt) in &self.counts {
            let t2 = if r == total {
                Rational::zero()
            } else {
                Rational::new(BigInt::from(c) * c, &nm * &nm * r * (total - r))
            };
            *out.entry(t2).or_default() += cnt;
        }
        out.into_iter().map(|(k, v)| (k, self.prob(v))).collect()
    }
}

/// Lexicographic `rank`-th `k`-subset of `0..total`.
fn unrank_combination(mut rank: u64, total: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0usize;
    for remaining in (1..=k).rev() {
        loop {
            // Subsets whose next element is `next`.
            let with = binom((total - next - 1) as i64, (remaining - 1) as u64)
                .to_u64()
                .expect("bounded by the enumeration limit");
            if rank < with {
                break;
            }
            rank -= with;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances to the next `k`-subset in lexicographic order.
fn next_combination(c: &mut [usize], total: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < total - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Enumerates all `binom(n+m, n)` label sequences, each with probability
/// `1/binom(n+m, n)` under the null.
pub fn enumerate_null(n: u64, m: u64, sided: Sided) -> Result<EnumeratedNull> {
    enumerate_null_with_limit(n, m, sided, ENUMERATION_LIMIT)
}

pub fn enumerate_null_with_limit(
    n: u64,
    m: u64,
    sided: Sided,
    limit: u64,
) -> Result<EnumeratedNull> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "sample sizes must be positive (n={n}, m={m})"
        )));
    }
    let total_len = (n + m) as usize;
    let sequences = binom(total_len as i64, n);
    let total_sequences = match sequences.to_u64() {
        Some(s) if s <= limit => s,
        _ => {
            return Err(Error::EnumerationTooLarge {
                sequences: sequences.to_string(),
                limit,
            })
        }
    };

    const CHUNK: u64 = 4096;
    let chunks = total_sequences.div_ceil(CHUNK);
    let partials: Vec<HashMap<(u64, u64), u64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(total_sequences);
            let mut comb = unrank_combination(start, total_len, n as usize);
            let mut local = HashMap::new();
            for rank in start..end {
                let seq = LabelSequence::from_x_positions(total_len, &comb).expect("n, m ≥ 1");
                let res = vincze(&seq, sided);
                *local.entry((res.r, res.path_max)).or_insert(0u64) += 1;
                if rank + 1 < end {
                    next_combination(&mut comb, total_len);
                }
            }
            local
        })
        .collect();

    let mut counts = BTreeMap::new();
    for part in partials {
        for (key, c) in part {
            *counts.entry(key).or_insert(0u64) += c;
        }
    }
    Ok(EnumeratedNull {
        n,
        m,
        sided,
        counts,
        total_sequences,
    })
}

/// A cell where the closed-form pmf and enumeration disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellMismatch {
    pub n: u64,
    pub p: u64,
    pub r: u64,
    pub k: u64,
    #[serde(serialize_with = "ser_rational")]
    pub formula: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub enumerated: Rational,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::exact::format_rational(q))
}

/// Compares both evaluations of the closed-form pmf (the rational formula
/// and the integer-count table) with enumeration for `m = n·p`, cell by
/// cell including cells that only one side reports.
pub fn check_formula(n: u64, p: u64) -> Result<Vec<CellMismatch>> {
    let m = n * p;
    let enumerated = enumerate_null(n, m, Sided::OneSided)?
        .pmf_rk()
        .ok_or_else(|| {
            Error::InvalidParameter(format!("D not on the 1/m lattice for n={n}, m={m}"))
        })?;
    let table = ExactNullTable::build(n, p)?;
    let mut cells: Vec<(u64, u64)> = enumerated.keys().copied().collect();
    cells.extend(table.counts().keys().copied());
    cells.sort_unstable();
    cells.dedup();
    let mut out = Vec::new();
    for (r, k) in cells {
        let want = enumerated
            .get(&(r, k))
            .cloned()
            .unwrap_or_else(Rational::zero);
        let direct = gutjahr_pmf(n, p, r, k)?;
        for formula in [direct, table.pmf(r, k)] {
            if formula != want {
                out.push(CellMismatch {
                    n,
                    p,
                    r,
                    k,
                    formula,
                    enumerated: want.clone(),
                });
                break;
            }
        }
    }
    Ok(out)
}

/// All `(n, p)` with `n(p+1) ≤ max_total`.
pub fn formula_cases(max_total: u64) -> Vec<(u64, u64)> {
    (1..=max_total / 2)
        .flat_map(|n| {
            (1..)
                .take_while(move |p| n * (p + 1) <= max_total)
                .map(move |p| (n, p))
        })
        .collect()
}

/// Settings for the Brownian-bridge simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeConfig {
    /// Number of grid intervals on `[0, 1]`.
    pub grid_points: usize,
    pub reps: usize,
    pub seed: u64,
    /// Replace the grid maximum by an exact draw of the continuous maximum
    /// inside the intervals that can hold it.
    pub refine: bool,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            grid_points: 10_000,
            reps: 200_000,
            seed: 0,
            refine: true,
        }
    }
}

/// One simulated `(M, a, h(M, a))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeDraw {
    pub max: f64,
    pub argmax: f64,
    /// `M/√(a(1 − a))`, zero when `a ∉ (0, 1)`.
    pub z: f64,
}

fn h(max: f64, argmax: f64) -> f64 {
    if argmax > 0.0 && argmax < 1.0 {
        max / (argmax * (1.0 - argmax)).sqrt()
    } else {
        0.0
    }
}

/// Intervals whose endpoints sit more than this many `√dt` below the grid
/// maximum cannot beat it except with probability `exp(−2·6²)`.
const REFINE_WINDOW: f64 = 6.0;

fn one_bridge(
    kind: Sided,
    grid: usize,
    refine: bool,
    rng: &mut impl Rng,
    path: &mut Vec<f64>,
) -> BridgeDraw {
    let dt = 1.0 / grid as f64;
    let sd = dt.sqrt();
    path.clear();
    path.push(0.0);
    let mut w = 0.0;
    for _ in 0..grid {
        let z: f64 = StandardNormal.sample(rng);
        w += sd * z;
        path.push(w);
    }
    let end = w;
    for (i, v) in path.iter_mut().enumerate() {
        *v -= i as f64 * dt * end;
    }
    let value = |b: f64| match kind {
        Sided::OneSided => b,
        Sided::TwoSided => b.abs(),
    };

    let mut best = f64::NEG_INFINITY;
    let mut best_at = 0usize;
    for (i, &b) in path.iter().enumerate() {
        if value(b) > best {
            best = value(b);
            best_at = i;
        }
    }
    let mut argmax = best_at as f64 * dt;

    if refine {
        let floor = best - REFINE_WINDOW * sd;
        let grid_best = best;
        let mut refined_best = f64::NEG_INFINITY;
        for i in 0..grid {
            let (u, v) = (path[i], path[i + 1]);
            if value(u).max(value(v)) < floor {
                continue;
            }
            // Maximize s·B with s the sign of the excursion.
            let s = match kind {
                Sided::OneSided => 1.0,
                Sided::TwoSided => {
                    if u + v >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            let (a, b) = (s * u, s * v);
            let uniform: f64 = 1.0 - rng.random::<f64>();
            let peak = 0.5 * (a + b + ((a - b).powi(2) - 2.0 * dt * uniform.ln()).sqrt());
            if peak > refined_best {
                refined_best = peak;
                argmax = (i as f64 + 0.5) * dt;
            }
        }
        best = refined_best.max(grid_best);
    }
    BridgeDraw {
        max: best,
        argmax,
        z: h(best, argmax),
    }
}

/// Simulates `h(M(B), a(B))` (one-sided) or `h(M(|B|), a(|B|))`
/// (two-sided) for a Brownian bridge `B(t) = W(t) − t·W(1)`.
pub fn simulate_limit_variable(kind: Sided, cfg: &BridgeConfig) -> Result<Vec<BridgeDraw>> {
    if cfg.grid_points < 1000 {
        return Err(Error::InvalidParameter(format!(
            "grid_points must be at least 1000, got {}",
            cfg.grid_points
        )));
    }
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    let tag = match kind {
        Sided::OneSided => 1,
        Sided::TwoSided => 2,
    };
    Ok((0..cfg.reps)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(cfg.grid_points + 1),
            |path, i| {
                let mut rng = stream_rng(cfg.seed, &[tag, i as u64]);
                one_bridge(kind, cfg.grid_points, cfg.refine, &mut rng, path)
            },
        )
        .collect())
}
