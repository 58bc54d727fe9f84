//! Largest points: count probabilities, the law of the `k`-th largest point,
//! and the limit laws as `lambda -> +-inf`.
//!
//! Count probabilities come from factorial moments,
//!
//! ```text
//! P(N = m) = sum_{j >= m} (-1)^(j-m) M_j / (m! (j-m)!),
//! ```
//!
//! whose partial sums alternately over- and underestimate (Bonferroni), so
//! every truncation gives a certified bracket.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::intensity::{intensity_total, IntensityParams};
use crate::moments::{factorial_moments_until, MAX_FACTORIAL_ORDER};
use crate::quadrature::QuadratureSpec;

/// A bracket wider than this is reported as a failure.
pub const MAX_BRACKET_WIDTH: f64 = 1e-3;

/// `P(N = count)` for the number `N` of points in `(threshold, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountProbability {
    pub lambda: f64,
    pub threshold: f64,
    pub count: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Highest factorial moment used.
    pub terms: usize,
}

impl CountProbability {
    /// Half-width of the certified bracket.
    pub fn bound(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Certified `[lower, upper]` for `P(N = m)` from `M_0..M_J` and their errors.
fn bracket(values: &[f64], errs: &[f64], m: usize) -> (f64, f64) {
    let mut lower: f64 = 0.0;
    let mut upper: f64 = 1.0;
    let mut partial = 0.0;
    let mut partial_err = 0.0;
    let scale = 1.0 / factorial(m);
    for j in m..values.len() {
        let c = scale / factorial(j - m);
        partial_err += c * errs[j];
        if (j - m).is_multiple_of(2) {
            partial += c * values[j];
            upper = upper.min(partial + partial_err);
        } else {
            partial -= c * values[j];
            lower = lower.max(partial - partial_err);
        }
    }
    let (lower, upper) = (lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0));
    if lower > upper {
        // only reachable through rounding below the error bounds
        let mid = 0.5 * (lower + upper);
        return (mid, mid);
    }
    (lower, upper)
}

/// `P(N = count)` for the points above `threshold`, bracketed to
/// `spec.abs_tol` when twelve factorial moments allow it.
pub fn count_probability(
    params: &IntensityParams,
    threshold: f64,
    count: usize,
    spec: &QuadratureSpec,
) -> Result<CountProbability> {
    if count >= MAX_FACTORIAL_ORDER {
        return Err(Error::OrderOutOfRange {
            order: count,
            max: MAX_FACTORIAL_ORDER - 1,
        });
    }
    let target = spec.abs_tol;
    let table = factorial_moments_until(params, threshold, MAX_FACTORIAL_ORDER, spec, |v, e| {
        if v.len() < count + 2 {
            return false;
        }
        let (lo, hi) = bracket(v, e, count);
        hi - lo <= target
    })?;
    let (lower, upper) = bracket(&table.values, &table.certified_abs_err, count);
    let terms = table.order();
    if upper - lower > MAX_BRACKET_WIDTH {
        return Err(Error::SeriesNotConverged { lower, upper, terms });
    }
    Ok(CountProbability {
        lambda: params.lambda,
        threshold,
        count,
        value: 0.5 * (lower + upper),
        lower,
        upper,
        terms,
    })
}

/// Probability that no point exceeds `threshold`.
pub fn void_probability(params: &IntensityParams, threshold: f64, spec: &QuadratureSpec) -> Result<CountProbability> {
    count_probability(params, threshold, 0, spec)
}

/// `P(xi_1 <= x)`.
pub fn largest_cdf(x: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<CountProbability> {
    if !(x > 0.0) {
        return Err(invalid(format!("largest_cdf needs x > 0, got {x}")));
    }
    void_probability(params, x, spec)
}

/// A density value with a certified bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub x: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Density of the `k`-th largest point: a point at `x` is `k`-th largest when
/// the process seen from it, at `lambda - x`, has `k - 1` points above `x`.
pub fn kth_largest_density(x: f64, k: usize, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Density> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if !(x > 0.0) {
        return Err(invalid(format!("density needs x > 0, got {x}")));
    }
    let shifted = params.at(params.lambda - x);
    let p = count_probability(&shifted, x, k - 1, spec)?;
    let l = intensity_total(x, params)?;
    Ok(Density {
        x,
        value: p.value * l,
        lower: p.lower * l,
        upper: p.upper * l,
    })
}

/// Centring and scaling of the largest point as `lambda -> -inf` (and of the
/// second largest as `lambda -> +inf`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeValueParams {
    pub lambda: f64,
    pub a_lambda: f64,
    /// `2 / lambda^2`
    pub scale: f64,
}

impl ExtremeValueParams {
    /// `x = 2 lambda^-2 (a_lambda + s)`
    pub fn threshold(&self, s: f64) -> f64 {
        self.scale * (self.a_lambda + s)
    }

    /// `s = lambda^2 x / 2 - a_lambda`
    pub fn standardize(&self, x: f64) -> f64 {
        x / self.scale - self.a_lambda
    }
}

/// `ln(2^4 3^5 pi) / 2`
fn half_ln_3888_pi() -> f64 {
    0.5 * (3888.0 * std::f64::consts::PI).ln()
}

pub fn gumbel_params(lambda: f64) -> Result<ExtremeValueParams> {
    let m = lambda.abs();
    if !(m > std::f64::consts::E) || !m.is_finite() {
        return Err(invalid(format!(
            "extreme-value centring needs |lambda| > e, got {lambda}"
        )));
    }
    let ln = m.ln();
    Ok(ExtremeValueParams {
        lambda,
        a_lambda: 3.0 * ln - 2.5 * ln.ln() - half_ln_3888_pi(),
        scale: 2.0 / (lambda * lambda),
    })
}

/// `exp(-e^{-s})`
pub fn gumbel_cdf(s: f64) -> f64 {
    (-(-s).exp()).exp()
}

/// Limit law of the `i`-th largest rescaled point:
/// `sum_{j < i} e^{-j s} / j! exp(-e^{-s})`.
pub fn kth_record_cdf(s: f64, i: usize) -> f64 {
    let e = (-s).exp();
    let mut ln_fact = 0.0;
    let mut sum = 0.0;
    for j in 0..i {
        if j > 0 {
            ln_fact += (j as f64).ln();
        }
        sum += (-(j as f64) * s - ln_fact - e).exp();
    }
    sum.min(1.0)
}

/// Mean and variance `(2 lambda, 2 / lambda)` of the normal approximation to
/// the largest point for large positive `lambda`.
pub fn normal_approx_params(lambda: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("normal approximation needs lambda > 0, got {lambda}")));
    }
    Ok((2.0 * lambda, 2.0 / lambda))
}
