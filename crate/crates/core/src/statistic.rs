//! Pooling of two samples and the Vincze statistic `(R, D)` with its
//! transform `T = D/√(R(N−R))`, one- and two-sided.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    X,
    Y,
}

impl Label {
    fn name(self) -> &'static str {
        match self {
            Label::X => "x",
            Label::Y => "y",
        }
    }
}

/// One of the two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    label: Label,
}

impl Sample {
    /// Rejects empty samples and non-finite values.
    pub fn new(values: Vec<f64>, label: Label) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample(label.name()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                sample: label.name(),
                index,
            });
        }
        Ok(Self { values, label })
    }

    pub fn x(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Label::X)
    }

    pub fn y(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Label::Y)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How equal values across the two samples are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    #[default]
    Error,
    XFirst,
    YFirst,
}

/// A value shared by both samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieDescriptor {
    pub value: f64,
    pub x_count: usize,
    pub y_count: usize,
}

/// X/Y labels of the pooled sample in ascending order of value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSequence {
    labels: Vec<Label>,
    n: u64,
    m: u64,
    ties: Vec<TieDescriptorBits>,
}

// f64 is not Eq; ties are stored by bit pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TieDescriptorBits {
    value: u64,
    x_count: usize,
    y_count: usize,
}

impl LabelSequence {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        let n = labels.iter().filter(|&&l| l == Label::X).count() as u64;
        let m = labels.len() as u64 - n;
        if n == 0 {
            return Err(Error::EmptySample("x"));
        }
        if m == 0 {
            return Err(Error::EmptySample("y"));
        }
        Ok(Self {
            labels,
            n,
            m,
            ties: Vec::new(),
        })
    }

    /// Builds the sequence with X at the given (sorted or unsorted, distinct)
    /// positions of a pooled sample of length `total`.
    pub fn from_x_positions(total: usize, x_positions: &[usize]) -> Result<Self> {
        let mut labels = vec![Label::Y; total];
        for &p in x_positions {
            labels[p] = Label::X;
        }
        Self::new(labels)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn total(&self) -> u64 {
        self.n + self.m
    }

    pub fn tie_report(&self) -> Vec<TieDescriptor> {
        self.ties
            .iter()
            .map(|t| TieDescriptor {
                value: f64::from_bits(t.value),
                x_count: t.x_count,
                y_count: t.y_count,
            })
            .collect()
    }
}

impl fmt::Display for LabelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            f.write_str(match l {
                Label::X => "X",
                Label::Y => "Y",
            })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for LabelSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .chars()
            .map(|c| match c {
                'X' | 'x' => Ok(Label::X),
                'Y' | 'y' => Ok(Label::Y),
                other => Err(Error::InvalidParameter(format!(
                    "label sequence contains {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels)
    }
}

/// Sorts the pooled sample and records the source label of each order statistic.
pub fn pool(x: &Sample, y: &Sample, tie_policy: TiePolicy) -> Result<LabelSequence> {
    let rank = |l: Label| match (tie_policy, l) {
        (TiePolicy::YFirst, Label::Y) | (TiePolicy::XFirst | TiePolicy::Error, Label::X) => 0u8,
        _ => 1u8,
    };
    let mut pooled: Vec<(f64, Label)> = x
        .values
        .iter()
        .map(|&v| (v, x.label))
        .chain(y.values.iter().map(|&v| (v, y.label)))
        .collect();
    // Stable, so within-sample ties keep input order.
    pooled.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| rank(a.1).cmp(&rank(b.1)))
    });

    let mut ties = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let xs = pooled[i..j].iter().filter(|p| p.1 == Label::X).count();
        let ys = (j - i) - xs;
        if xs > 0 && ys > 0 {
            ties.push(TieDescriptorBits {
                value: pooled[i].0.to_bits(),
                x_count: xs,
                y_count: ys,
            });
        }
        i = j;
    }
    if tie_policy == TiePolicy::Error && !ties.is_empty() {
        return Err(Error::Tie {
            values: ties.iter().map(|t| f64::from_bits(t.value)).collect(),
        });
    }

    let mut seq = LabelSequence::new(pooled.into_iter().map(|p| p.1).collect())?;
    seq.ties = ties;
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    OneSided,
    TwoSided,
}

/// Observed Vincze statistic and its transform.
///
/// The path value is kept in units of `1/(nm)`: `D = path_max/(nm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VinczeResult {
    pub sided: Sided,
    pub n: u64,
    pub m: u64,
    /// Smallest pooled index (1-based) attaining the maximum.
    pub r: u64,
    pub path_max: u64,
    /// `D = k/m`, present when `n` divides `path_max`.
    pub k: Option<u64>,
    /// `T²`, exact; zero when `r = n + m`.
    pub t_squared: Rational,
    pub t_float: f64,
    pub scaled_t_float: f64,
}

impl VinczeResult {
    fn from_walk(sided: Sided, n: u64, m: u64, r: u64, path_max: u64) -> Self {
        let total = n + m;
        let k = path_max.is_multiple_of(n).then_some(path_max / n);
        let t_squared = if r == total {
            Rational::from_integer(BigInt::from(0))
        } else {
            let nm = BigInt::from(n) * m;
            Rational::new(
                BigInt::from(path_max) * path_max,
                &nm * &nm * r * (total - r),
            )
        };
        let mut res = Self {
            sided,
            n,
            m,
            r,
            path_max,
            k,
            t_squared,
            t_float: 0.0,
            scaled_t_float: 0.0,
        };
        res.t_float = res.t::<f64>();
        res.scaled_t_float = scale_statistic(&res);
        res
    }

    pub fn total(&self) -> u64 {
        self.n + self.m
    }

    /// `D` (or `D*`) as an exact rational.
    pub fn d(&self) -> Rational {
        Rational::new(self.path_max.into(), BigInt::from(self.n) * self.m)
    }

    pub fn t<F: Real>(&self) -> F {
        if self.r == self.total() {
            return F::zero();
        }
        let nm = F::count(self.n) * F::count(self.m);
        let spread = (F::count(self.r) * F::count(self.total() - self.r)).sqrt();
        F::count(self.path_max) / nm / spread
    }

    /// `√(nm(n+m))·T`, generic over the scalar.
    pub fn scaled_t<F: Real>(&self) -> F {
        if self.r == self.total() {
            return F::zero();
        }
        let n = F::count(self.n);
        let m = F::count(self.m);
        let total = F::count(self.total());
        let r = F::count(self.r);
        let rest = F::count(self.total() - self.r);
        F::count(self.path_max) * (total / (n * m * r * rest)).sqrt()
    }

    /// `(√(nm(n+m))·T)²` exactly.
    pub fn scaled_t_squared(&self) -> Rational {
        &self.t_squared * Rational::from_integer(BigInt::from(self.n) * self.m * self.total())
    }
}

/// `√(nm(n+m))·T` in `f64`; exactly zero when `r = n + m`.
pub fn scale_statistic(res: &VinczeResult) -> f64 {
    res.scaled_t::<f64>()
}

fn walk(seq: &LabelSequence, sided: Sided) -> VinczeResult {
    let (n, m) = (seq.n as i64, seq.m as i64);
    let mut c: i64 = 0;
    let mut best: i64 = i64::MIN;
    let mut best_at = 0u64;
    for (i, &l) in seq.labels.iter().enumerate() {
        c += match l {
            Label::X => m,
            Label::Y => -n,
        };
        let v = match sided {
            Sided::OneSided => c,
            Sided::TwoSided => c.abs(),
        };
        if v > best {
            best = v;
            best_at = i as u64 + 1;
        }
    }
    debug_assert_eq!(c, 0);
    VinczeResult::from_walk(sided, seq.n, seq.m, best_at, best as u64)
}

/// One-sided statistic: `D = max (F_n − G_m)` over the pooled order statistics.
pub fn vincze_one_sided(seq: &LabelSequence) -> VinczeResult {
    walk(seq, Sided::OneSided)
}

/// Two-sided statistic: `D* = max |F_n − G_m|`.
pub fn vincze_two_sided(seq: &LabelSequence) -> VinczeResult {
    walk(seq, Sided::TwoSided)
}

pub fn vincze(seq: &LabelSequence, sided: Sided) -> VinczeResult {
    walk(seq, sided)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(s: &str) -> LabelSequence {
        s.parse().unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn pool_orders_by_value() {
        let x = Sample::x(vec![1.0]).unwrap();
        let y = Sample::y(vec![2.0]).unwrap();
        assert_eq!(pool(&x, &y, TiePolicy::Error).unwrap().to_string(), "XY");
        assert_eq!(pool(&y, &x, TiePolicy::Error).unwrap().to_string(), "XY");
        let x = Sample::x(vec![2.0]).unwrap();
        let y = Sample::y(vec![1.0]).unwrap();
        assert_eq!(pool(&x, &y, TiePolicy::Error).unwrap().to_string(), "YX");
    }

    #[test]
    fn pool_tie_policies() {
        let x = Sample::x(vec![1.0, 3.0]).unwrap();
        let y = Sample::y(vec![1.0]).unwrap();
        let s = pool(&x, &y, TiePolicy::XFirst).unwrap();
        assert_eq!(s.to_string(), "XYX");
        assert_eq!(
            s.tie_report(),
            vec![TieDescriptor {
                value: 1.0,
                x_count: 1,
                y_count: 1
            }]
        );
        assert_eq!(pool(&x, &y, TiePolicy::YFirst).unwrap().to_string(), "YXX");
        assert_eq!(
            pool(&x, &y, TiePolicy::Error),
            Err(Error::Tie { values: vec![1.0] })
        );
        // Ties inside one sample are harmless.
        let x = Sample::x(vec![1.0, 1.0]).unwrap();
        let y = Sample::y(vec![2.0]).unwrap();
        let s = pool(&x, &y, TiePolicy::Error).unwrap();
        assert!(s.tie_report().is_empty());
        // Signed zeros collide.
        let x = Sample::x(vec![-0.0]).unwrap();
        let y = Sample::y(vec![0.0]).unwrap();
        assert!(pool(&x, &y, TiePolicy::Error).is_err());
    }

    #[test]
    fn sample_validation() {
        assert_eq!(Sample::x(vec![]), Err(Error::EmptySample("x")));
        assert_eq!(
            Sample::y(vec![1.0, f64::NAN]),
            Err(Error::NonFinite {
                sample: "y",
                index: 1
            })
        );
        assert!(Sample::x(vec![f64::INFINITY]).is_err());
        assert!("XX".parse::<LabelSequence>().is_err());
        assert!("XZ".parse::<LabelSequence>().is_err());
    }

    #[test]
    fn one_sided_examples() {
        let r = vincze_one_sided(&seq("XY"));
        assert_eq!((r.r, r.k), (1, Some(1)));
        assert_eq!(r.t_squared, q(1, 1));
        assert_eq!(r.t_float, 1.0);

        let r = vincze_one_sided(&seq("YX"));
        assert_eq!((r.r, r.k), (2, Some(0)));
        assert_eq!(r.t_squared, q(0, 1));

        let r = vincze_one_sided(&seq("XXYY"));
        assert_eq!((r.r, r.k), (2, Some(2)));
        assert_eq!(r.d(), q(1, 1));
        assert_eq!(r.t_squared, q(1, 4));
        assert_eq!(r.t_float, 0.5);
    }

    #[test]
    fn two_sided_examples() {
        let r = vincze_two_sided(&seq("YX"));
        assert_eq!(r.r, 1);
        assert_eq!(r.d(), q(1, 1));
        assert_eq!(r.t_squared, q(1, 1));

        let r = vincze_two_sided(&seq("XY"));
        assert_eq!((r.r, r.d()), (1, q(1, 1)));

        let r = vincze_two_sided(&seq("XYXY"));
        assert_eq!(r.r, 1);
        assert_eq!(r.d(), q(1, 2));
        assert_eq!(r.t_squared, q(1, 12));
    }

    #[test]
    fn two_sided_d_need_not_be_multiple_of_one_over_m() {
        // n=3, m=2: path (2, -1, 1, -2, 0) in units of 1/6.
        let r = vincze_two_sided(&seq("XYXYX"));
        assert_eq!(r.d(), q(1, 3));
        assert_eq!(r.k, None);
        assert_eq!(r.r, 1);
    }

    #[test]
    fn scaling_examples() {
        let r = vincze_one_sided(&seq("XY"));
        assert!((scale_statistic(&r) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.scaled_t_squared(), q(2, 1));
        let r = vincze_one_sided(&seq("YX"));
        assert_eq!(scale_statistic(&r), 0.0);
        let r = vincze_one_sided(&seq("XXYY"));
        assert!((scale_statistic(&r) - 2.0).abs() < 1e-15);
        assert!((r.scaled_t::<f32>() - 2.0).abs() < 1e-6);
    }

    fn labels_strategy() -> impl Strategy<Value = LabelSequence> {
        (1usize..12, 1usize..12)
            .prop_flat_map(|(n, m)| {
                Just((0..n + m).collect::<Vec<_>>())
                    .prop_shuffle()
                    .prop_map(move |perm| (n, m, perm))
            })
            .prop_map(|(n, m, perm)| LabelSequence::from_x_positions(n + m, &perm[..n]).unwrap())
    }

    proptest! {
        #[test]
        fn one_sided_never_exceeds_two_sided(s in labels_strategy()) {
            let one = vincze_one_sided(&s);
            let two = vincze_two_sided(&s);
            prop_assert!(one.d() <= two.d());
            prop_assert!(one.path_max <= s.m() * s.n());
            if one.r == s.total() {
                prop_assert_eq!(one.path_max, 0);
            }
        }

        #[test]
        fn multiple_sizes_give_integral_k(n in 1u64..6, p in 1u64..4, seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let m = n * p;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pos: Vec<usize> = (0..(n + m) as usize).collect();
            pos.shuffle(&mut rng);
            let s = LabelSequence::from_x_positions((n + m) as usize, &pos[..n as usize]).unwrap();
            let res = vincze_one_sided(&s);
            prop_assert!(res.k.is_some());
            prop_assert!(res.k.unwrap() <= m);
        }

        #[test]
        fn rank_invariance(
            xs in proptest::collection::vec(-100.0f64..100.0, 1..15),
            ys in proptest::collection::vec(-100.0f64..100.0, 1..15),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let x = Sample::x(xs.clone()).unwrap();
            let y = Sample::y(ys.clone()).unwrap();
            let Ok(s1) = pool(&x, &y, TiePolicy::Error) else { return Ok(()) };
            let g = |v: f64| (scale * v + shift).atan() + 0.001 * v;
            let gx = Sample::x(xs.iter().map(|&v| g(v)).collect()).unwrap();
            let gy = Sample::y(ys.iter().map(|&v| g(v)).collect()).unwrap();
            let Ok(s2) = pool(&gx, &gy, TiePolicy::Error) else { return Ok(()) };
            prop_assert_eq!(vincze_one_sided(&s1), vincze_one_sided(&s2));
            prop_assert_eq!(vincze_two_sided(&s1), vincze_two_sided(&s2));
        }
    }
}
