//! Empirical distribution functions and the distances used to compare
//! simulations with analytic laws.

/// Dvoretzky-Kiefer-Wolfowitz band half-width: with probability at least
/// `confidence`, `sup |F_n − F| ≤ √(ln(2/(1 − confidence))/(2n))`.
pub fn dkw_bound(count: usize, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * count as f64)).sqrt()
}

/// Empirical distribution function of a sample.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of observations `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v <= x);
        below as f64 / self.sorted.len() as f64
    }

    /// Sample quantile by the lower order statistic.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// `max_x |F_n(x) − F(x)|` over the given grid.
pub fn sup_distance_on_grid(ecdf: &Ecdf, cdf: impl Fn(f64) -> f64, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&x| (ecdf.eval(x) - cdf(x)).abs())
        .fold(0.0, f64::max)
}

/// Kolmogorov distance `sup_x |F_n(x) − F(x)|` for a continuous `F`,
/// attained at the jumps of `F_n`.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Sample median (mean of the middle pair for even counts).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
