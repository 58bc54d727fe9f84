//! Summary statistics for Monte Carlo output.

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Standard error of the sample mean.
pub fn mean_se(xs: &[f64]) -> f64 {
    let (_, v) = mean_var(xs);
    (v / xs.len() as f64).sqrt()
}

/// Standard error of the unbiased sample variance, from the fourth central
/// moment: `Var(s^2) ~ (m4 - (n-3)/(n-1) s^4) / n`.
pub fn variance_se(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mean, v) = mean_var(xs);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    ((m4 - (n - 3.0) / (n - 1.0) * v * v).max(0.0) / n).sqrt()
}

/// Empirical distribution function of a sample.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut xs: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        Ecdf { sorted: xs }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of the sample `<= x`.
    pub fn at(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Fraction of the sample `< x`.
    pub fn before(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s < x) as f64 / self.sorted.len() as f64
    }

    /// Sample points in `[a, b]`, where the supremum distance can jump.
    fn jumps(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        let lo = self.sorted.partition_point(|&s| s < a);
        let hi = self.sorted.partition_point(|&s| s <= b);
        self.sorted[lo..hi].iter().copied()
    }

    /// `sup_{x in [a, b]} |F_n(x) - cdf(x)|` for a continuous `cdf`, checked
    /// at both sides of every jump and at the ends.
    pub fn ks_against<F: FnMut(f64) -> f64>(&self, mut cdf: F, a: f64, b: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for x in [a, b].into_iter().chain(self.jumps(a, b)) {
            let c = cdf(x);
            worst = worst.max((self.at(x) - c).abs()).max((self.before(x) - c).abs());
        }
        worst
    }

    /// Largest deviation from tabulated `(x, F(x))` pairs, checked at the
    /// tabulation points only.
    pub fn ks_on_grid(&self, table: &[(f64, f64)]) -> f64 {
        table.iter().map(|&(x, c)| (self.at(x) - c).abs()).fold(0.0, f64::max)
    }

    /// Two-sample supremum distance over `[a, b]`.
    pub fn ks_two_sample(&self, other: &Ecdf, a: f64, b: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for x in [a, b].into_iter().chain(self.jumps(a, b)).chain(other.jumps(a, b)) {
            worst = worst
                .max((self.at(x) - other.at(x)).abs())
                .max((self.before(x) - other.before(x)).abs());
        }
        worst
    }
}
