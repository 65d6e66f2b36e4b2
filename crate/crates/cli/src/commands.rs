use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_traits::{Signed, Zero};
use serde::Serialize;

use vtest_core::alternatives::BuiltinBase;
use vtest_core::asymptotic::{maxwell_cdf, maxwell_sf, two_sided_cdf, two_sided_sf};
use vtest_core::cache::TableCache;
use vtest_core::ecdf::{dkw_bound, ks_distance};
use vtest_core::exact::{format_rational, parse_rational, to_f64};
use vtest_core::exact_null::{ratio, Tail};
use vtest_core::montecarlo::{mean_p_values, power_comparison, PValueMode, SimConfig, SimModel};
use vtest_core::oracle::{
    check_formula, formula_cases, simulate_limit_variable, BridgeConfig, CellMismatch,
};
use vtest_core::statistic::{pool, vincze, Sample, Sided, TiePolicy};
use vtest_core::{Rational, SeriesControl64};

use crate::input::{parse_pairs, read_sample};
use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

type CmdResult = Result<(), Failure>;

fn print_json<T: Serialize>(value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(
            File::create(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_alpha(s: &str) -> Result<Rational, Failure> {
    let a = parse_rational(s).map_err(|e| Failure::input(format!("--alpha: {e}")))?;
    if !a.is_positive() || a >= Rational::from_integer(1.into()) {
        return Err(Failure::input("--alpha must lie in (0, 1)"));
    }
    Ok(a)
}

/// A probability as exact `"num/den"` (when known) and as a float.
#[derive(Debug, Serialize)]
struct Prob {
    exact: Option<String>,
    float: f64,
}

impl Prob {
    fn exact(q: &Rational) -> Self {
        Self {
            exact: Some(format_rational(q)),
            float: to_f64(q),
        }
    }

    fn float(x: f64) -> Self {
        Self {
            exact: None,
            float: x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Asymptotic,
    Auto,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieArg {
    Error,
    XFirst,
    YFirst,
}

impl From<TieArg> for TiePolicy {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Error => TiePolicy::Error,
            TieArg::XFirst => TiePolicy::XFirst,
            TieArg::YFirst => TiePolicy::YFirst,
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// File with the X sample, one number per line ('#' starts a comment line).
    #[arg(long)]
    x: PathBuf,
    /// File with the Y sample.
    #[arg(long)]
    y: PathBuf,
    /// Use sup |F_n − G_m| instead of sup (F_n − G_m).
    #[arg(long)]
    two_sided: bool,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    /// Significance level, decimal or "num/den".
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, value_enum, default_value_t = TieArg::Error)]
    tie_policy: TieArg,
    /// Largest n+m for which `auto` builds the exact table.
    #[arg(long, default_value_t = 600)]
    exact_cap: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Serialize)]
struct Decision {
    alpha: Prob,
    reject: bool,
    /// Exact critical value of the scaled statistic; reject when it is exceeded.
    critical_scaled_t: Option<f64>,
    attained_size: Option<Prob>,
}

#[derive(Debug, Serialize)]
struct TestReport {
    schema_version: u32,
    n: u64,
    m: u64,
    sided: Sided,
    r: u64,
    d: Prob,
    t: f64,
    t_squared: String,
    scaled_t: f64,
    scaled_t_squared: String,
    p_value: Prob,
    method: Method,
    warnings: Vec<String>,
    decision: Option<Decision>,
}

fn choose_method(
    args: &TestArgs,
    n: u64,
    m: u64,
    warnings: &mut Vec<String>,
) -> Result<Method, Failure> {
    let exact_ok = m.is_multiple_of(n);
    match args.method {
        Method::Exact if args.two_sided => Err(Failure::input(
            "the exact null distribution covers the one-sided statistic only",
        )),
        Method::Exact if !exact_ok => Err(Failure::input(format!(
            "exact p-values need m to be a multiple of n (n={n}, m={m})"
        ))),
        Method::Auto if args.two_sided => Ok(Method::Asymptotic),
        Method::Auto if !exact_ok => {
            warnings.push(format!(
                "m={m} is not a multiple of n={n}; using the limit law"
            ));
            Ok(Method::Asymptotic)
        }
        Method::Auto if n + m > args.exact_cap => {
            warnings.push(format!(
                "n+m={} exceeds the exact cap {}; using the limit law",
                n + m,
                args.exact_cap
            ));
            Ok(Method::Asymptotic)
        }
        Method::Auto => Ok(Method::Exact),
        other => Ok(other),
    }
}

pub fn test(args: TestArgs) -> CmdResult {
    let x = Sample::x(read_sample(&args.x)?)?;
    let y = Sample::y(read_sample(&args.y)?)?;
    let seq = pool(&x, &y, args.tie_policy.into())?;
    let mut warnings = Vec::new();
    let ties = seq.tie_report();
    if !ties.is_empty() {
        warnings.push(format!(
            "{} tied value(s) across samples ordered by {}",
            ties.len(),
            args.tie_policy
                .to_possible_value()
                .expect("no skipped variants")
                .get_name()
        ));
    }
    let sided = if args.two_sided {
        Sided::TwoSided
    } else {
        Sided::OneSided
    };
    let res = vincze(&seq, sided);
    let (n, m) = (res.n, res.m);
    let method = choose_method(&args, n, m, &mut warnings)?;
    let alpha = args.alpha.as_deref().map(parse_alpha).transpose()?;

    let (p_value, decision) = if method == Method::Exact {
        let table = TableCache::from_env().load_or_build(n, ratio(n, m)?)?;
        let p = table.p_value(&res.t_squared, Tail::Greater);
        let decision = match &alpha {
            Some(a) => {
                let cv = table.critical_value(a)?;
                Some(Decision {
                    alpha: Prob::exact(a),
                    reject: cv.rejects(&res.t_squared),
                    critical_scaled_t: Some(cv.scaled),
                    attained_size: Some(Prob::exact(&cv.attained_size)),
                })
            }
            None => None,
        };
        (Prob::exact(&p), decision)
    } else {
        let p = match sided {
            Sided::OneSided => maxwell_sf(res.scaled_t_float),
            Sided::TwoSided => two_sided_sf(res.scaled_t_float, &SeriesControl64::default())?,
        };
        let decision = alpha.as_ref().map(|a| Decision {
            alpha: Prob::exact(a),
            reject: p <= to_f64(a),
            critical_scaled_t: None,
            attained_size: None,
        });
        (Prob::float(p), decision)
    };

    let report = TestReport {
        schema_version: SCHEMA_VERSION,
        n,
        m,
        sided,
        r: res.r,
        d: Prob::exact(&res.d()),
        t: res.t_float,
        t_squared: format_rational(&res.t_squared),
        scaled_t: res.scaled_t_float,
        scaled_t_squared: format_rational(&res.scaled_t_squared()),
        p_value,
        method,
        warnings,
        decision,
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if args.json {
        return print_json(&report);
    }
    println!(
        "n = {}, m = {}, {}",
        report.n,
        report.m,
        sided_word(report.sided)
    );
    println!("R = {}", report.r);
    println!(
        "D = {} ({:.6})",
        report.d.exact.as_deref().unwrap_or(""),
        report.d.float
    );
    println!("T = {:.6}", report.t);
    println!("scaled T = {:.6}", report.scaled_t);
    match &report.p_value.exact {
        Some(q) => println!("p-value = {:.6} ({q}, exact)", report.p_value.float),
        None => println!("p-value = {:.6} (asymptotic)", report.p_value.float),
    }
    if let Some(d) = &report.decision {
        println!(
            "alpha = {}: {}",
            d.alpha.float,
            if d.reject { "reject" } else { "do not reject" }
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[arg(long)]
    n: u64,
    /// m = n·p.
    #[arg(long, default_value_t = 1)]
    p: u64,
    /// List the support points with their exact CDF (the default).
    #[arg(long)]
    support: bool,
    /// Evaluate the CDF at these points (decimal or "num/den").
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "support",
        allow_hyphen_values = true
    )]
    grid: Option<Vec<String>>,
    /// Interpret grid points as values of T rather than √(nm(n+m))·T.
    #[arg(long, requires = "grid")]
    unscaled: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn dist(args: DistArgs) -> CmdResult {
    let table = TableCache::from_env().load_or_build(args.n, args.p)?;
    let mut w = csv::Writer::from_writer(output(&args.out)?);
    match &args.grid {
        None => {
            w.write_record([
                "scaled_t",
                "scaled_t_squared",
                "t_squared",
                "pmf",
                "cdf",
                "cdf_float",
            ])?;
            let total = table.total_sequences();
            for pt in table.support() {
                let pmf = Rational::new(pt.mass.clone(), total.clone());
                let cdf = Rational::new(pt.cumulative.clone(), total.clone());
                w.write_record([
                    pt.scaled.to_string(),
                    format_rational(&pt.scaled_squared),
                    format_rational(&pt.t_squared),
                    format_rational(&pmf),
                    format_rational(&cdf),
                    to_f64(&cdf).to_string(),
                ])?;
            }
        }
        Some(points) => {
            let nmn =
                Rational::from_integer((table.n() * table.m() * (table.n() + table.m())).into());
            w.write_record([if args.unscaled { "t" } else { "x" }, "cdf", "cdf_float"])?;
            for s in points {
                let x =
                    parse_rational(s).map_err(|e| Failure::input(format!("--grid '{s}': {e}")))?;
                let cdf = if args.unscaled {
                    table.cdf(&x)
                } else if x.is_negative() {
                    Rational::zero()
                } else {
                    table.cdf_t_squared(&(&x * &x / &nmn))
                };
                w.write_record([
                    s.trim().to_string(),
                    format_rational(&cdf),
                    to_f64(&cdf).to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(Failure::io)
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Sample-size pairs n:m, each with m a multiple of n.
    #[arg(long, default_value = "10:20,60:60")]
    pairs: String,
    #[arg(long, default_value_t = 4.0)]
    grid_max: f64,
    #[arg(long, default_value_t = 400)]
    grid_steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn curves(args: CurvesArgs) -> CmdResult {
    let pairs = parse_pairs(&args.pairs).map_err(Failure::input)?;
    if !(args.grid_max.is_finite() && args.grid_max > 0.0) || args.grid_steps == 0 {
        return Err(Failure::input(
            "--grid-max must be positive and --grid-steps at least 1",
        ));
    }
    let cache = TableCache::from_env();
    let mut tables = Vec::new();
    for &(n, m) in &pairs {
        tables.push(cache.load_or_build(n, ratio(n, m)?)?);
    }
    let mut w = csv::Writer::from_writer(output(&args.out)?);
    let mut header = vec!["x".to_string()];
    header.extend(pairs.iter().map(|(n, m)| format!("K_{n}_{m}")));
    header.push("K".into());
    w.write_record(&header)?;
    for i in 0..=args.grid_steps {
        let x = args.grid_max * i as f64 / args.grid_steps as f64;
        let mut row = vec![x.to_string()];
        row.extend(tables.iter().map(|t| to_f64(&t.cdf_scaled(x)).to_string()));
        row.push(maxwell_cdf(x).to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(Failure::io)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    NormalShift,
    #[value(alias = "example1")]
    LowerTail,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaseArg {
    Uniform,
    Normal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PValuesArg {
    Exact,
    Asymptotic,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::NormalShift)]
    model: ModelArg,
    /// Location shift of X ~ N(shift, 1) against Y ~ N(0, 1).
    #[arg(long, default_value_t = 0.4)]
    shift: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "10,15,20,25,30,35,40,50,60,70,80,100,200"
    )]
    n_list: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PValuesArg::Exact)]
    p_values: PValuesArg,
    /// Lower-tail model: G(τ).
    #[arg(long, default_value_t = 0.2)]
    tau_q: f64,
    /// Lower-tail model: F = δG below τ.
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = BaseArg::Uniform)]
    base: BaseArg,
    /// Report rejection rates at this level instead of mean p-values.
    #[arg(long)]
    power: Option<String>,
    #[arg(long)]
    json: bool,
}

pub fn simulate(args: SimulateArgs) -> CmdResult {
    let model = match args.model {
        ModelArg::NormalShift => SimModel::NormalShift { shift: args.shift },
        ModelArg::LowerTail => SimModel::LowerTail {
            base: match args.base {
                BaseArg::Uniform => BuiltinBase::Uniform,
                BaseArg::Normal => BuiltinBase::Normal,
            },
            tau_quantile: args.tau_q,
            delta: args.delta,
        },
    };
    let cfg = SimConfig {
        n_values: args.n_list,
        model,
        replicates: args.reps,
        seed: args.seed,
        p_value_mode: match args.p_values {
            PValuesArg::Exact => PValueMode::Exact,
            PValuesArg::Asymptotic => PValueMode::Asymptotic,
        },
    };
    let cache = TableCache::from_env();
    let started = std::time::Instant::now();

    if let Some(a) = &args.power {
        let alpha = parse_alpha(a)?;
        let report = power_comparison(&cfg, &alpha, &cache)?;
        eprintln!("runtime: {:.2} s", started.elapsed().as_secs_f64());
        if args.json {
            return print_json(&report);
        }
        println!(
            "{:>5} | {:>7} | {:>7} | {:>8} | {:>8}",
            "n=m", "rej_V", "rej_S", "size_V", "size_S"
        );
        for r in &report.rows {
            let size_v = to_f64(&parse_rational(&r.size_v)?);
            let size_s = to_f64(&parse_rational(&r.size_s)?);
            println!(
                "{:>5} | {:>7.4} | {:>7.4} | {:>8.5} | {:>8.5}",
                r.n, r.reject_rate_v, r.reject_rate_s, size_v, size_s
            );
        }
        return Ok(());
    }

    let report = mean_p_values(&cfg, &cache)?;
    eprintln!("runtime: {:.2} s", report.runtime.as_secs_f64());
    if args.json {
        print_json(&report)
    } else {
        print!("{}", report.to_text_table());
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Check every (n, p) with n(p+1) ≤ this.
    #[arg(long, default_value_t = 12)]
    max_total: u64,
    /// Also compare both limit laws with simulated Brownian bridges.
    #[arg(long)]
    bridge: bool,
    #[arg(long, default_value_t = 10_000)]
    grid: usize,
    #[arg(long, default_value_t = 200_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the grid maximum of each bridge without the exact in-cell correction.
    #[arg(long)]
    no_refine: bool,
    /// Confidence of the DKW band used as the pass threshold.
    #[arg(long, default_value_t = 0.999)]
    confidence: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Serialize)]
struct FormulaCase {
    n: u64,
    p: u64,
    pass: bool,
    mismatches: Vec<CellMismatch>,
}

#[derive(Debug, Serialize)]
struct BridgeCase {
    sided: Sided,
    reps: usize,
    grid: usize,
    ks_distance: f64,
    band: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct OracleReport {
    schema_version: u32,
    pass: bool,
    formula: Vec<FormulaCase>,
    bridge: Vec<BridgeCase>,
}

fn sided_word(sided: Sided) -> &'static str {
    match sided {
        Sided::OneSided => "one-sided",
        Sided::TwoSided => "two-sided",
    }
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn oracle(args: OracleArgs) -> CmdResult {
    if !(args.confidence > 0.0 && args.confidence < 1.0) {
        return Err(Failure::input("--confidence must lie in (0, 1)"));
    }
    let mut formula = Vec::new();
    for (n, p) in formula_cases(args.max_total) {
        let mismatches = check_formula(n, p)?;
        formula.push(FormulaCase {
            n,
            p,
            pass: mismatches.is_empty(),
            mismatches,
        });
    }
    let mut bridge = Vec::new();
    if args.bridge {
        let cfg = BridgeConfig {
            grid_points: args.grid,
            reps: args.reps,
            seed: args.seed,
            refine: !args.no_refine,
        };
        let ctl = SeriesControl64::default();
        for sided in [Sided::OneSided, Sided::TwoSided] {
            let z: Vec<f64> = simulate_limit_variable(sided, &cfg)?
                .iter()
                .map(|d| d.z)
                .collect();
            let ks = match sided {
                Sided::OneSided => ks_distance(&z, maxwell_cdf),
                Sided::TwoSided => ks_distance(&z, |x| two_sided_cdf(x, &ctl).unwrap_or(f64::NAN)),
            };
            let band = dkw_bound(z.len(), args.confidence);
            bridge.push(BridgeCase {
                sided,
                reps: args.reps,
                grid: args.grid,
                ks_distance: ks,
                band,
                pass: ks <= band,
            });
        }
    }
    let pass = formula.iter().all(|c| c.pass) && bridge.iter().all(|c| c.pass);
    let report = OracleReport {
        schema_version: SCHEMA_VERSION,
        pass,
        formula,
        bridge,
    };
    if args.json {
        print_json(&report)?;
    } else {
        for c in &report.formula {
            println!("{} formula n={} p={}", pass_word(c.pass), c.n, c.p);
            for mm in &c.mismatches {
                println!(
                    "  r={} k={}: formula {} vs enumeration {}",
                    mm.r,
                    mm.k,
                    format_rational(&mm.formula),
                    format_rational(&mm.enumerated)
                );
            }
        }
        for c in &report.bridge {
            println!(
                "{} bridge {}: sup distance {:.5} (DKW band {:.5})",
                pass_word(c.pass),
                sided_word(c.sided),
                c.ks_distance,
                c.band
            );
        }
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::verification("oracle checks failed"))
    }
}
