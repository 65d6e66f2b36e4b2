//! Monte Carlo comparison of the V-test with the Smirnov test: mean
//! p-values under an alternative (one row per sample size), rejection rates
//! at exact critical values, and null simulations of the scaled statistic.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_traits::{One, Signed};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alternatives::{BaseDistribution, BuiltinBase, LowerTailFamily, NormalShiftModel};
use crate::asymptotic::{maxwell_sf, smirnov_asymptotic_sf};
use crate::cache::TableProvider;
use crate::ecdf::mean_and_std_err;
use crate::error::{Error, Result};
use crate::exact::{format_rational, to_f64};
use crate::exact_null::{SmirnovTail, Tail};
use crate::rng::{stream_rng, SimRng};
use crate::statistic::{pool, vincze, LabelSequence, Sample, Sided, TiePolicy, VinczeResult};
use crate::Rational;

/// Version of the JSON layout of [`SimReport`] and [`PowerReport`].
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Default sample sizes of the comparison.
pub const DEFAULT_SIZES: [u64; 13] = [10, 15, 20, 25, 30, 35, 40, 50, 60, 70, 80, 100, 200];

/// Data-generating model; X is drawn from `F`, Y from `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimModel {
    NormalShift {
        shift: f64,
    },
    LowerTail {
        base: BuiltinBase,
        tau_quantile: f64,
        delta: f64,
    },
}

impl Default for SimModel {
    fn default() -> Self {
        SimModel::NormalShift { shift: 0.4 }
    }
}

enum Sampler {
    Normal(NormalShiftModel),
    LowerTail(LowerTailFamily<BuiltinBase>),
}

impl Sampler {
    fn new(model: &SimModel) -> Result<Self> {
        Ok(match *model {
            SimModel::NormalShift { shift } => Sampler::Normal(NormalShiftModel::new(shift)?),
            SimModel::LowerTail {
                base,
                tau_quantile,
                delta,
            } => Sampler::LowerTail(LowerTailFamily::from_quantile(base, tau_quantile, delta)?),
        })
    }

    fn draw(&self, rng: &mut SimRng, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Sampler::Normal(model) => model.draw(rng, n, m),
            Sampler::LowerTail(fam) => {
                let x = fam.draw(rng, n);
                let y = (0..m)
                    .map(|_| fam.base().inverse_cdf(rng.random::<f64>()))
                    .collect();
                (x, y)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMode {
    #[default]
    Exact,
    Asymptotic,
}

/// Monte Carlo settings; both samples have size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_values: Vec<u64>,
    pub model: SimModel,
    pub replicates: usize,
    pub seed: u64,
    pub p_value_mode: PValueMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_values: DEFAULT_SIZES.to_vec(),
            model: SimModel::default(),
            replicates: 1000,
            seed: 0,
            p_value_mode: PValueMode::Exact,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter(
                "replicates must be positive".into(),
            ));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::InvalidParameter(
                "n_values must be a non-empty list of positive sizes".into(),
            ));
        }
        Sampler::new(&self.model).map(|_| ())
    }
}

/// One row of the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub n: u64,
    pub replicates: usize,
    pub mean_p_v: f64,
    pub mean_p_s: f64,
    pub std_err_p_v: f64,
    pub std_err_p_s: f64,
    /// Standard error of the paired difference `p_V − p_S`.
    pub std_err_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub model: SimModel,
    pub p_value_mode: PValueMode,
    pub seed: u64,
    pub replicates: usize,
    pub rows: Vec<SimRow>,
    /// Wall time; kept out of the JSON so reruns compare byte for byte.
    #[serde(skip)]
    pub runtime: Duration,
}

impl SimReport {
    pub fn row(&self, n: u64) -> Option<&SimRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// Aligned text table with columns `n`, `p_V`, `p_S`.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>5} | {:>8} | {:>8}", "n=m", "p_V", "p_S");
        let _ = writeln!(out, "{:-<6}+{:-<10}+{:-<9}", "", "", "");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>5} | {:>8.4} | {:>8.4}",
                r.n, r.mean_p_v, r.mean_p_s
            );
        }
        out
    }
}

fn draw_statistic(
    sampler: &Sampler,
    rng: &mut SimRng,
    n: usize,
    m: usize,
    sided: Sided,
) -> Result<VinczeResult> {
    let (x, y) = sampler.draw(rng, n, m);
    // Continuous draws collide with probability zero; fix an order anyway.
    let seq = pool(&Sample::x(x)?, &Sample::y(y)?, TiePolicy::XFirst)?;
    Ok(vincze(&seq, sided))
}

/// Mean p-values of the V-test (`1 − J(T)`) and the Smirnov test (`L_n(D)`)
/// for each `n` in the configuration.
pub fn mean_p_values(cfg: &SimConfig, tables: &dyn TableProvider) -> Result<SimReport> {
    cfg.validate()?;
    let started = Instant::now();
    let sampler = Sampler::new(&cfg.model)?;
    let mut rows = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let exact = match cfg.p_value_mode {
            PValueMode::Exact => Some((tables.table(n, 1)?, SmirnovTail::new(n)?)),
            PValueMode::Asymptotic => None,
        };
        let pairs: Vec<(f64, f64)> = (0..cfg.replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(cfg.seed, &[n, i as u64]);
                let res =
                    draw_statistic(&sampler, &mut rng, n as usize, n as usize, Sided::OneSided)?;
                Ok(match &exact {
                    Some((table, smirnov)) => {
                        let k = res.k.expect("equal sizes give D = k/n");
                        (
                            to_f64(&table.p_value(&res.t_squared, Tail::Greater)),
                            to_f64(&smirnov.tail_at(k)),
                        )
                    }
                    None => {
                        let d = to_f64(&res.d());
                        let lambda = (n as f64 / 2.0).sqrt() * d;
                        (
                            maxwell_sf(res.scaled_t_float),
                            smirnov_asymptotic_sf(lambda),
                        )
                    }
                })
            })
            .collect::<Result<_>>()?;
        let pv: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ps: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
        let (mean_p_v, std_err_p_v) = mean_and_std_err(&pv);
        let (mean_p_s, std_err_p_s) = mean_and_std_err(&ps);
        let (_, std_err_diff) = mean_and_std_err(&diff);
        rows.push(SimRow {
            n,
            replicates: cfg.replicates,
            mean_p_v,
            mean_p_s,
            std_err_p_v,
            std_err_p_s,
            std_err_diff,
        });
    }
    Ok(SimReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model: cfg.model,
        p_value_mode: cfg.p_value_mode,
        seed: cfg.seed,
        replicates: cfg.replicates,
        rows,
        runtime: started.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub n: u64,
    pub replicates: usize,
    pub reject_rate_v: f64,
    pub reject_rate_s: f64,
    pub std_err_v: f64,
    pub std_err_s: f64,
    /// Critical value of `√(nm(n+m))·T`.
    pub critical_v: f64,
    /// Exact size of the V-test, as `"num/den"`.
    pub size_v: String,
    /// The Smirnov test rejects when `D > critical_s_k/n`.
    pub critical_s_k: u64,
    pub size_s: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub schema_version: u32,
    pub model: SimModel,
    pub alpha: String,
    pub seed: u64,
    pub rows: Vec<PowerRow>,
}

/// Rejection frequencies of both tests at their exact (conservative)
/// critical values.
pub fn power_comparison(
    cfg: &SimConfig,
    alpha: &Rational,
    tables: &dyn TableProvider,
) -> Result<PowerReport> {
    cfg.validate()?;
    if !(alpha.is_positive() && alpha < &Rational::one()) {
        return Err(Error::out_of_range("alpha", "must lie in (0, 1)"));
    }
    let sampler = Sampler::new(&cfg.model)?;
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let table = tables.table(n, 1)?;
        let crit_v = table.critical_value(alpha)?;
        let smirnov = SmirnovTail::new(n)?;
        let crit_k = smirnov.critical_k(alpha)?;
        let decisions: Vec<(f64, f64)> = (0..cfg.replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(cfg.seed, &[n, i as u64]);
                let res =
                    draw_statistic(&sampler, &mut rng, n as usize, n as usize, Sided::OneSided)?;
                let k = res.k.expect("equal sizes give D = k/n");
                Ok((
                    f64::from(u8::from(crit_v.rejects(&res.t_squared))),
                    f64::from(u8::from(k > crit_k)),
                ))
            })
            .collect::<Result<_>>()?;
        let v: Vec<f64> = decisions.iter().map(|d| d.0).collect();
        let s: Vec<f64> = decisions.iter().map(|d| d.1).collect();
        let (reject_rate_v, std_err_v) = mean_and_std_err(&v);
        let (reject_rate_s, std_err_s) = mean_and_std_err(&s);
        rows.push(PowerRow {
            n,
            replicates: cfg.replicates,
            reject_rate_v,
            reject_rate_s,
            std_err_v,
            std_err_s,
            critical_v: crit_v.scaled,
            size_v: format_rational(&crit_v.attained_size),
            critical_s_k: crit_k,
            size_s: format_rational(&smirnov.tail_at(crit_k)),
        });
    }
    Ok(PowerReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model: cfg.model,
        alpha: format_rational(alpha),
        seed: cfg.seed,
        rows,
    })
}

/// Statistic of a uniformly random label sequence, i.e. under the null.
pub fn random_null_statistic(rng: &mut impl Rng, n: usize, m: usize, sided: Sided) -> VinczeResult {
    let xs = sample_indices(rng, n + m, n).into_vec();
    let seq = LabelSequence::from_x_positions(n + m, &xs).expect("n, m ≥ 1");
    vincze(&seq, sided)
}

/// `reps` null draws of `√(nm(n+m))·T` (or `T*`).
pub fn simulate_null_scaled(
    n: u64,
    m: u64,
    reps: usize,
    seed: u64,
    sided: Sided,
) -> Result<Vec<f64>> {
    if n == 0 || m == 0 || reps == 0 {
        return Err(Error::InvalidParameter(
            "n, m and reps must be positive".into(),
        ));
    }
    let tag = match sided {
        Sided::OneSided => 1,
        Sided::TwoSided => 2,
    };
    Ok((0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, &[tag, n, m, i as u64]);
            random_null_statistic(&mut rng, n as usize, m as usize, sided).scaled_t_float
        })
        .collect())
}

/// `reps` draws of the one-sided statistic with X from `F` and Y from `G`
/// as described by `model`, both samples of size `n`.
pub fn simulate_statistics(
    model: &SimModel,
    n: u64,
    reps: usize,
    seed: u64,
) -> Result<Vec<VinczeResult>> {
    let sampler = Sampler::new(model)?;
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, &[n, i as u64]);
            draw_statistic(&sampler, &mut rng, n as usize, n as usize, Sided::OneSided)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::InMemoryTables;

    fn cfg(n_values: Vec<u64>, shift: f64, replicates: usize) -> SimConfig {
        SimConfig {
            n_values,
            model: SimModel::NormalShift { shift },
            replicates,
            seed: 2024,
            p_value_mode: PValueMode::Exact,
        }
    }

    #[test]
    fn null_calibration() {
        let tables = InMemoryTables::default();
        // Strict upper tails of a discrete law have null mean (1 − Σp²)/2,
        // so small n sits visibly below 1/2.
        let rep = mean_p_values(&cfg(vec![10, 100], 0.0, 10_000), &tables).unwrap();
        for row in &rep.rows {
            let v = to_f64(&tables.table(row.n, 1).unwrap().null_mean_p_value());
            let s = to_f64(&SmirnovTail::new(row.n).unwrap().null_mean_p_value());
            assert!(
                (row.mean_p_v - v).abs() < 4.0 * row.std_err_p_v,
                "{row:?} {v}"
            );
            assert!(
                (row.mean_p_s - s).abs() < 4.0 * row.std_err_p_s,
                "{row:?} {s}"
            );
        }
        let row = rep.row(100).unwrap();
        assert!((0.45..=0.65).contains(&row.mean_p_v), "{row:?}");
        assert!((0.45..=0.65).contains(&row.mean_p_s), "{row:?}");
    }

    #[test]
    fn deterministic_reports() {
        let tables = InMemoryTables::default();
        let c = cfg(vec![10, 20], 0.4, 200);
        let a = mean_p_values(&c, &tables).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| mean_p_values(&c, &tables)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(!serde_json::to_string(&a).unwrap().contains("runtime"));
    }

    #[test]
    fn asymptotic_mode_runs_and_tracks_exact() {
        let tables = InMemoryTables::default();
        let mut c = cfg(vec![60], 0.4, 500);
        let exact = mean_p_values(&c, &tables).unwrap();
        c.p_value_mode = PValueMode::Asymptotic;
        let asym = mean_p_values(&c, &tables).unwrap();
        let (e, a) = (exact.row(60).unwrap(), asym.row(60).unwrap());
        assert!((e.mean_p_v - a.mean_p_v).abs() < 0.05, "{e:?} {a:?}");
        assert!((e.mean_p_s - a.mean_p_s).abs() < 0.05, "{e:?} {a:?}");
    }

    #[test]
    fn power_under_null_is_valid() {
        let tables = InMemoryTables::default();
        let alpha = Rational::new(1.into(), 20.into());
        let rep = power_comparison(&cfg(vec![20], 0.0, 4000), &alpha, &tables).unwrap();
        let row = &rep.rows[0];
        assert!(
            row.reject_rate_v <= 0.05 + 3.0 * row.std_err_v.max((0.05f64 * 0.95 / 4000.0).sqrt())
        );
        assert!(
            row.reject_rate_s <= 0.05 + 3.0 * row.std_err_s.max((0.05f64 * 0.95 / 4000.0).sqrt())
        );
    }

    #[test]
    fn power_single_replicate_is_binary() {
        let tables = InMemoryTables::default();
        let alpha = Rational::new(1.into(), 10.into());
        let rep = power_comparison(&cfg(vec![10], 0.4, 1), &alpha, &tables).unwrap();
        for v in [rep.rows[0].reject_rate_v, rep.rows[0].reject_rate_s] {
            assert!(v == 0.0 || v == 1.0);
        }
        assert!(power_comparison(&cfg(vec![10], 0.4, 1), &Rational::one(), &tables).is_err());
    }

    #[test]
    fn config_validation() {
        let tables = InMemoryTables::default();
        assert!(mean_p_values(&cfg(vec![10], 0.4, 0), &tables).is_err());
        assert!(mean_p_values(&cfg(vec![], 0.4, 10), &tables).is_err());
        let mut c = cfg(vec![10], 0.4, 10);
        c.model = SimModel::LowerTail {
            base: BuiltinBase::Uniform,
            tau_quantile: 0.7,
            delta: 2.0,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn text_table_layout() {
        let tables = InMemoryTables::default();
        let rep = mean_p_values(&cfg(vec![10], 0.4, 1), &tables).unwrap();
        let text = rep.to_text_table();
        assert!(text.lines().next().unwrap().contains("p_V"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn null_scaled_statistic_is_reproducible() {
        let a = simulate_null_scaled(5, 10, 100, 1, Sided::OneSided).unwrap();
        assert_eq!(
            a,
            simulate_null_scaled(5, 10, 100, 1, Sided::OneSided).unwrap()
        );
        assert!(a.iter().all(|&v| v >= 0.0));
        assert!(simulate_null_scaled(0, 10, 100, 1, Sided::OneSided).is_err());
    }
}
