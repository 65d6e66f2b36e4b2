use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn vtest(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtest"))
        .args(args)
        .env("VTEST_CACHE_DIR", cache)
        .env_remove("RAYON_NUM_THREADS")
        .output()
        .expect("spawn vtest")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, body: &str) -> String {
        let p = self.dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn run(&self, args: &[&str]) -> Output {
        vtest(&self.dir.path().join("cache"), args)
    }
}

#[test]
fn single_points_exact() {
    let f = Fixture::new();
    let (a, b) = (f.file("a", "1.0\n"), f.file("b", "2.0\n"));
    let r = json(&f.run(&["test", "--x", &a, "--y", &b, "--json"]));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["r"], 1);
    assert_eq!(r["d"]["exact"], "1");
    assert_eq!(r["t"], 1.0);
    assert_eq!(r["p_value"]["exact"], "0");
    assert_eq!(r["method"], "exact");

    let r = json(&f.run(&["test", "--x", &b, "--y", &a, "--json"]));
    assert_eq!(r["t"], 0.0);
    assert_eq!(r["p_value"]["exact"], "1/2");
}

#[test]
fn two_sided_is_asymptotic() {
    let f = Fixture::new();
    let (a, b) = (f.file("a", "1.0\n"), f.file("b", "2.0\n"));
    let r = json(&f.run(&["test", "--x", &b, "--y", &a, "--two-sided", "--json"]));
    assert_eq!(r["method"], "asymptotic");
    assert_eq!(r["p_value"]["exact"], Value::Null);
    let p = r["p_value"]["float"].as_f64().unwrap();
    let ctl = vtest_core::SeriesControl64::default();
    let want = vtest_core::asymptotic::two_sided_sf(2f64.sqrt(), &ctl).unwrap();
    assert!((p - want).abs() < 1e-12);
    let out = f.run(&[
        "test",
        "--x",
        &b,
        "--y",
        &a,
        "--two-sided",
        "--method",
        "exact",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn auto_falls_back_with_warning() {
    let f = Fixture::new();
    let a = f.file("a", "# x sample\n0.1\n0.5\n");
    let b = f.file("b", "0.3\n0.2\n0.9\n");
    let out = f.run(&["test", "--x", &a, "--y", &b, "--json"]);
    let r = json(&out);
    assert_eq!(r["method"], "asymptotic");
    assert_eq!(r["warnings"].as_array().unwrap().len(), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let out = f.run(&["test", "--x", &a, "--y", &b, "--method", "exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alpha_decision_uses_critical_value() {
    let f = Fixture::new();
    let xs: String = (0..10).map(|i| format!("{}\n", i as f64)).collect();
    let ys: String = (0..10).map(|i| format!("{}\n", 10.5 + i as f64)).collect();
    let (a, b) = (f.file("a", &xs), f.file("b", &ys));
    let r = json(&f.run(&["test", "--x", &a, "--y", &b, "--alpha", "1/20", "--json"]));
    let d = &r["decision"];
    assert_eq!(d["reject"], true);
    assert_eq!(d["alpha"]["exact"], "1/20");
    assert!(d["attained_size"]["float"].as_f64().unwrap() <= 0.05);
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    let a = f.file("a", "1\n2\n");
    let tie = f.file("t", "2\n3\n");
    let bad = f.file("bad", "1\n\n# ok\nxyz\n");
    let empty = f.file("empty", "# nothing\n");
    let out = f.run(&["test", "--x", &a, "--y", &tie]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    let out = f.run(&[
        "test",
        "--x",
        &a,
        "--y",
        &tie,
        "--tie-policy",
        "x-first",
        "--json",
    ]);
    assert!(json(&out)["warnings"][0]
        .as_str()
        .unwrap()
        .contains("x-first"));
    let out = f.run(&["test", "--x", &bad, "--y", &a]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":4:"));
    assert_eq!(
        f.run(&["test", "--x", &empty, "--y", &a]).status.code(),
        Some(2)
    );
    assert_eq!(
        f.run(&["test", "--x", "/nonexistent", "--y", &a])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(f.run(&["test", "--x", &a]).status.code(), Some(2));
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn dist_support_and_grid() {
    let f = Fixture::new();
    let rows = csv_rows(&f.run(&["dist", "--n", "1", "--p", "1", "--support"]));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "0");
    assert_eq!(rows[1][4], "1/2");
    assert_eq!(rows[2][1], "2");
    assert_eq!(rows[2][4], "1");

    let rows = csv_rows(&f.run(&["dist", "--n", "2", "--p", "1"]));
    assert_eq!(rows.last().unwrap()[4], "1");

    let rows = csv_rows(&f.run(&["dist", "--n", "10", "--p", "2"]));
    let cdf: Vec<f64> = rows[1..].iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(rows.last().unwrap()[4], "1");

    let rows = csv_rows(&f.run(&["dist", "--n", "2", "--grid", "-1,0,1/2,10"]));
    assert_eq!(rows[0], ["x", "cdf", "cdf_float"]);
    assert_eq!(rows[1][1], "0");
    assert_eq!(rows[2][1], "1/3");
    assert_eq!(rows[4][1], "1");
    assert_eq!(
        f.run(&["dist", "--n", "2", "--grid", "abc"]).status.code(),
        Some(2)
    );
}

#[test]
fn dist_writes_file_and_uses_cache() {
    let f = Fixture::new();
    let out = f.dir.path().join("t.csv");
    let o = f.run(&[
        "dist",
        "--n",
        "5",
        "--p",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success() && o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .starts_with("scaled_t,"));
    let cached = std::fs::read_dir(f.dir.path().join("cache"))
        .unwrap()
        .count();
    assert!(cached >= 1);
}

#[test]
fn curves_match_limit_ordering() {
    let f = Fixture::new();
    let rows = csv_rows(&f.run(&[
        "curves",
        "--pairs",
        "10:20,60:60",
        "--grid-max",
        "4",
        "--grid-steps",
        "200",
    ]));
    assert_eq!(rows[0], ["x", "K_10_20", "K_60_60", "K"]);
    let vals: Vec<Vec<f64>> = rows[1..]
        .iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(vals.len(), 201);
    for col in 1..4 {
        assert!(vals.iter().all(|r| (0.0..=1.0).contains(&r[col])));
        assert!(vals.windows(2).all(|w| w[0][col] <= w[1][col]));
    }
    assert_eq!(vals[0][3], 0.0);
    // the atom at zero contains P(R = n+m) = m/((n+m)(n+m−1))
    assert!(vals[0][1] >= 20.0 / (30.0 * 29.0));
    assert!(vals[0][2] > 0.0);
    let sup = |c: usize| vals.iter().map(|r| (r[c] - r[3]).abs()).fold(0.0, f64::max);
    assert!(sup(2) < sup(1));

    let out = f.run(&["curves", "--pairs", "10:15"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_reports_are_reproducible() {
    let f = Fixture::new();
    let args = [
        "simulate", "--n-list", "10,20", "--reps", "50", "--seed", "7", "--json",
    ];
    let a = f.run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_vtest"))
        .args(args)
        .env("VTEST_CACHE_DIR", f.dir.path().join("cache"))
        .env("RAYON_NUM_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["rows"].as_array().unwrap().len(), 2);
    assert!(String::from_utf8_lossy(&a.stderr).contains("runtime"));

    let r = json(&f.run(&["simulate", "--n-list", "10", "--reps", "1", "--json"]));
    assert_eq!(r["rows"][0]["std_err_p_v"], 0.0);

    let text = f.run(&["simulate", "--n-list", "10", "--reps", "20"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("p_V"));

    let r = json(&f.run(&[
        "simulate", "--model", "example1", "--base", "normal", "--tau-q", "0.1", "--delta", "3",
        "--n-list", "20", "--reps", "20", "--json",
    ]));
    assert_eq!(r["model"]["kind"], "lower_tail");

    let r = json(&f.run(&[
        "simulate", "--n-list", "20", "--reps", "40", "--power", "0.05", "--json",
    ]));
    assert_eq!(r["alpha"], "1/20");
    assert_eq!(f.run(&["simulate", "--reps", "0"]).status.code(), Some(2));
}

#[test]
fn oracle_cases_and_failure_code() {
    let f = Fixture::new();
    let r = json(&f.run(&["oracle", "--max-total", "4", "--json"]));
    let cases: Vec<(u64, u64)> = r["formula"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["n"].as_u64().unwrap(), c["p"].as_u64().unwrap()))
        .collect();
    assert_eq!(cases, [(1, 1), (1, 2), (1, 3), (2, 1)]);
    assert_eq!(r["pass"], true);

    let out = f.run(&[
        "oracle",
        "--max-total",
        "2",
        "--bridge",
        "--grid",
        "1000",
        "--reps",
        "4000",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with("PASS bridge"))
            .count(),
        2
    );

    // Without the in-cell correction a coarse grid is visibly biased.
    let out = f.run(&[
        "oracle",
        "--max-total",
        "2",
        "--bridge",
        "--grid",
        "1000",
        "--reps",
        "100000",
        "--no-refine",
    ]);
    assert_eq!(out.status.code(), Some(4));
}
