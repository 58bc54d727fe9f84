//! Moments of total weight and of point counts above a threshold.
//!
//! Single integrals go through the adaptive routines of
//! [`crate::quadrature`]. Factorial moments of counts need the nested
//! recursion
//!
//! ```text
//! M_0(mu) = 1,   M_k(mu) = int_a^inf Lambda^mu(x) M_{k-1}(mu - x) dx,
//! ```
//!
//! which is evaluated level by level on a uniform grid in `mu`, with cubic
//! interpolation of `ln M_{k-1}` between grid points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::intensity::{
    drift_f, drift_f_difference, intensity_label, intensity_tail_bound, intensity_total, inv_sqrt_2pi,
    ln_intensity_base, psi_envelope_constant, IntensityParams,
};
use crate::quadrature::{integrate, integrate_to_infinity, Integral, QuadratureSpec, WG, WGK, XGK};

/// Largest factorial-moment order supported.
pub const MAX_FACTORIAL_ORDER: usize = 12;

/// Nodes stop here; `Psi(x^(3/2))` is certified a little beyond it.
const NODE_LIMIT: f64 = 24.0;
const GRID_STEP: f64 = 0.05;
const MAX_GRID_POINTS: usize = 20_000;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

fn lam(x: f64, params: &IntensityParams) -> f64 {
    intensity_total(x, params).unwrap_or(f64::NAN)
}

/// `int_a^inf x^q Lambda^lambda(x) dx`.
fn power_integral(q: f64, a: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    params.validate()?;
    let lambda = params.lambda;
    integrate_to_infinity(
        |x| x.powf(q) * lam(x, params),
        a,
        spec,
        |x| intensity_tail_bound(x, lambda, q),
    )
}

/// Expected total size of the points above `eps`.
pub fn expected_weight(eps: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    check_eps(eps)?;
    power_integral(1.0, eps, params, spec)
}

/// Expected number of points above `eps`.
pub fn expected_count(eps: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    check_eps(eps)?;
    power_integral(0.0, eps, params, spec)
}

/// `int_0^inf x^q Lambda^lambda(x) dx` for `q > 3/2`.
pub fn power_moment(q: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    if !(q > 1.5) || !q.is_finite() {
        return Err(invalid(format!("power moment needs q > 3/2, got {q}")));
    }
    power_integral(q, 0.0, params, spec)
}

/// `Lambda^lambda(y) - Lambda^(lambda - x)(y)`, as `-Lambda^lambda(y) expm1(-D)`.
fn palm_difference(x: f64, y: f64, params: &IntensityParams) -> f64 {
    let d = drift_f_difference(y, params.lambda - x, params.lambda);
    -lam(y, params) * (-d).exp_m1()
}

/// Spec for inner integrals whose errors are summed against an outer weight
/// of total mass `mass`: only the absolute tolerance binds.
fn inner_spec(spec: &QuadratureSpec, mass: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: spec.abs_tol / (10.0 * mass.max(1.0)),
        rel_tol: 1e-300,
        upper_cutoff: None,
        max_subdivisions: spec.max_subdivisions,
    }
}

/// Variance of the total size of the points above `eps`, from
/// `int_eps^inf int_0^eps x y Lambda(x) (Lambda(y) - Lambda^(lambda-x)(y)) dy dx`.
pub fn weight_variance(eps: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    check_eps(eps)?;
    params.validate()?;
    let lambda = params.lambda;
    let mass = expected_weight(eps, params, spec)?;
    let inner = inner_spec(spec, mass.value + mass.err_bound);
    let s2 = integrate(|y| y * y * lam(y, params), 0.0, eps, &inner)?;
    let outer = |x: f64| {
        let lx = lam(x, params);
        if lx == 0.0 {
            return 0.0;
        }
        match integrate(|y| y * palm_difference(x, y, params), 0.0, eps, &inner) {
            Ok(v) => x * lx * v.value,
            Err(_) => f64::NAN,
        }
    };
    // For x > 2 lambda, 0 <= 1 - e^{-D} <= D <= x y (x + eps + 2|lambda|)/2.
    let s2_bound = s2.value + s2.err_bound;
    let tail = |x: f64| {
        0.5 * s2_bound
            * (intensity_tail_bound(x, lambda, 3.0) + (eps + 2.0 * lambda.abs()) * intensity_tail_bound(x, lambda, 2.0))
    };
    let body = integrate_to_infinity(outer, eps, spec, tail)?;
    Ok(Integral {
        value: body.value,
        err_bound: body.err_bound + inner.abs_tol * (mass.value + mass.err_bound),
    })
}

/// The same variance from the other representation,
/// `int_eps^inf x^2 Lambda - int_eps^inf int_eps^inf x y Lambda(x) (Lambda(y) - Lambda^(lambda-x)(y))`.
/// Slower; kept as a cross-check.
pub fn weight_variance_direct(eps: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    check_eps(eps)?;
    params.validate()?;
    let lambda = params.lambda;
    let mass = expected_weight(eps, params, spec)?;
    let mass_bound = mass.value + mass.err_bound;
    let inner = inner_spec(spec, mass_bound);
    let integrand = |x: f64| {
        let lx = lam(x, params);
        if lx == 0.0 {
            return 0.0;
        }
        let cross = integrate_to_infinity(
            |y| y * palm_difference(x, y, params),
            eps,
            &inner,
            |y| intensity_tail_bound(y, lambda, 1.0),
        );
        match cross {
            Ok(v) => x * x * lx - x * lx * v.value,
            Err(_) => f64::NAN,
        }
    };
    let tail = |x: f64| intensity_tail_bound(x, lambda, 2.0) + mass_bound * intensity_tail_bound(x, lambda, 1.0);
    let body = integrate_to_infinity(integrand, eps, spec, tail)?;
    Ok(Integral {
        value: body.value,
        err_bound: body.err_bound + inner.abs_tol * mass_bound,
    })
}

/// Variance of the number of points above `eps`: `M_2 + M_1 - M_1^2`.
pub fn count_variance(eps: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    check_eps(eps)?;
    let table = factorial_moments(params, eps, 2, spec)?;
    let (m1, e1) = (table.values[1], table.certified_abs_err[1]);
    let (m2, e2) = (table.values[2], table.certified_abs_err[2]);
    Ok(Integral {
        value: m2 + m1 - m1 * m1,
        err_bound: e2 + e1 * (1.0 + 2.0 * m1 + e1),
    })
}

/// `E (N)_k` for `k = 0..=K`, where `N` counts the points in `(a, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialMomentTable {
    pub lambda: f64,
    pub a: f64,
    pub values: Vec<f64>,
    pub certified_abs_err: Vec<f64>,
}

impl FactorialMomentTable {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

/// Fixed Gauss–Kronrod nodes over `[a, upper]`; weights include the panel
/// half-width, Gauss weights are zero off the Gauss nodes.
struct Nodes {
    x: Vec<f64>,
    wk: Vec<f64>,
    wg: Vec<f64>,
    ln_base: Vec<f64>,
}

const PANEL: usize = 15;

impl Nodes {
    fn build(a: f64, upper: f64, psi_tol: f64) -> Result<Nodes> {
        let mut breaks = vec![a];
        let mut x = a;
        let ratio = 2f64.powf(0.25);
        while x < upper.min(1.0) {
            x = (x * ratio).min(upper.min(1.0));
            breaks.push(x);
        }
        while x < upper {
            x = (x + 0.125).min(upper);
            breaks.push(x);
        }
        let mut nodes = Nodes {
            x: Vec::new(),
            wk: Vec::new(),
            wg: Vec::new(),
            ln_base: Vec::new(),
        };
        for w in breaks.windows(2) {
            let center = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            for j in 0..7 {
                let g = if j % 2 == 1 { WG[j / 2] * half } else { 0.0 };
                for s in [-1.0, 1.0] {
                    nodes.x.push(center + s * half * XGK[j]);
                    nodes.wk.push(WGK[j] * half);
                    nodes.wg.push(g);
                }
            }
            nodes.x.push(center);
            nodes.wk.push(WGK[7] * half);
            nodes.wg.push(WG[3] * half);
        }
        nodes.ln_base = nodes
            .x
            .par_iter()
            .map(|&x| ln_intensity_base(x, psi_tol))
            .collect::<Result<Vec<f64>>>()?;
        Ok(nodes)
    }

    /// `int Lambda^mu(x) g(mu - x) dx` over the nodes, where `g` returns a
    /// value and its error. Returns the value and an error bound made of the
    /// Kronrod–Gauss differences and the propagated error of `g`.
    fn integrate<G: Fn(f64) -> (f64, f64)>(&self, mu: f64, g: G) -> (f64, f64) {
        let mut value = 0.0;
        let mut err = 0.0;
        for p in (0..self.x.len()).step_by(PANEL) {
            let (mut k, mut gs, mut abs, mut prop) = (0.0, 0.0, 0.0, 0.0);
            for n in p..p + PANEL {
                let x = self.x[n];
                let l = (self.ln_base[n] - drift_f(x, mu)).exp();
                let (m, e) = g(mu - x);
                let f = l * m;
                k += self.wk[n] * f;
                gs += self.wg[n] * f;
                abs += self.wk[n] * f.abs();
                prop += self.wk[n] * l * e;
            }
            value += k;
            err += (k - gs).abs() + 50.0 * f64::EPSILON * abs + prop;
        }
        (value, err)
    }
}

/// One level `M_j` tabulated on `mu_min + i delta`, `i < len`.
struct Level {
    mu_min: f64,
    delta: f64,
    values: Vec<f64>,
    errs: Vec<f64>,
    ln_values: Vec<f64>,
    /// `|fourth difference of ln M|` starting at each index.
    d4: Vec<f64>,
    /// Bound on `M_j` over the whole range `mu <= top`.
    sup: f64,
}

impl Level {
    fn new(mu_min: f64, delta: f64, values: Vec<f64>, errs: Vec<f64>) -> Level {
        let ln_values: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let d4 = ln_values
            .windows(5)
            .map(|f| (f[0] - 4.0 * f[1] + 6.0 * f[2] - 4.0 * f[3] + f[4]).abs())
            .collect();
        let sup = values.iter().zip(&errs).map(|(v, e)| v + e).fold(0.0, f64::max);
        Level {
            mu_min,
            delta,
            values,
            errs,
            ln_values,
            d4,
            sup,
        }
    }

    /// Interpolated `M_j(nu)` and an error bound. Below the grid `M_j` is
    /// increasing in `nu`, so zero is within `M_j(mu_min)` of the truth.
    fn eval(&self, nu: f64) -> (f64, f64) {
        let n = self.values.len();
        if nu < self.mu_min {
            return (0.0, self.values[0] + self.errs[0]);
        }
        let s = (nu - self.mu_min) / self.delta;
        let i = (s.floor() as usize).min(n - 2);
        let j0 = i.saturating_sub(1).min(n - 4);
        let stencil = j0..j0 + 4;
        let table_err = 1.5 * self.errs[stencil.clone()].iter().fold(0.0, |m: f64, &e| m.max(e));
        let f = &self.ln_values[stencil];
        if f.iter().all(|v| v.is_finite()) {
            let t = s - j0 as f64;
            let mut p = 0.0;
            for (k, fk) in f.iter().enumerate() {
                let mut basis = 1.0;
                for m in 0..4 {
                    if m != k {
                        basis *= (t - m as f64) / (k as f64 - m as f64);
                    }
                }
                p += basis * fk;
            }
            let lo = j0.saturating_sub(1);
            let hi = (j0 + 1).min(self.d4.len() - 1);
            let d4 = self.d4[lo..=hi].iter().fold(0.0, |m: f64, &d| m.max(d));
            let m = p.exp();
            // cubic remainder: |f''''| delta^4 / 24 * |prod (t - t_k)| with the product at most 1
            let interp = m * (d4 / 12.0).exp_m1();
            if d4.is_finite() && interp.is_finite() {
                return (m, interp + table_err);
            }
        }
        // underflowed neighbours: M is monotone here, so the bracket is exact
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let t = s - i as f64;
        (v0 + t * (v1 - v0), (v1 - v0).abs() + table_err)
    }
}

/// Upper bound on `M_1(mu)` for `mu <= 0`, from the `Psi` envelope and
/// `F(x, mu) >= x mu^2 / 2`.
fn count_bound_negative(mu: f64, a: f64) -> f64 {
    let r = 0.5 * mu * mu;
    let poly = 2.0 / 3.0 * a.powf(-1.5)
        + if r > 0.0 {
            a.sqrt() / r + 0.886_226_925_452_758 / r.powf(1.5)
        } else {
            f64::INFINITY
        };
    inv_sqrt_2pi() * psi_envelope_constant() * (-a * r).exp() * poly
}

/// Factorial moments `E (N)_k`, `k = 0..=order`, of the number `N` of points
/// in `(a, inf)`, each with a certified absolute error.
pub fn factorial_moments(
    params: &IntensityParams,
    a: f64,
    order: usize,
    spec: &QuadratureSpec,
) -> Result<FactorialMomentTable> {
    factorial_moments_until(params, a, order, spec, |_, _| false)
}

/// [`factorial_moments`] that stops early once `stop(values, errs)` holds.
pub(crate) fn factorial_moments_until<S>(
    params: &IntensityParams,
    a: f64,
    order: usize,
    spec: &QuadratureSpec,
    mut stop: S,
) -> Result<FactorialMomentTable>
where
    S: FnMut(&[f64], &[f64]) -> bool,
{
    params.validate()?;
    spec.validate()?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid(format!("threshold must be positive, got {a}")));
    }
    if !(1..=MAX_FACTORIAL_ORDER).contains(&order) {
        return Err(Error::OrderOutOfRange {
            order,
            max: MAX_FACTORIAL_ORDER,
        });
    }
    let lambda = params.lambda;
    let mut values = vec![1.0];
    let mut errs = vec![0.0];

    let upper = NODE_LIMIT.max(a);
    let tail = intensity_tail_bound(upper, lambda, 0.0);
    if !tail.is_finite() {
        return Err(invalid(format!(
            "lambda = {lambda} is too large to certify the count tail"
        )));
    }
    if a >= NODE_LIMIT {
        // every M_k is at most tail^k
        for k in 1..=order {
            values.push(0.0);
            errs.push(tail.powi(k as i32));
        }
        return Ok(FactorialMomentTable {
            lambda,
            a,
            values,
            certified_abs_err: errs,
        });
    }

    let rough = expected_count(a, params, spec)?.value.max(1.0);
    let threshold = 1e-18 / rough.powi(order as i32 - 1);
    let top = lambda - a;
    let mut mu_min = top.min(0.0) - 0.5;
    while count_bound_negative(mu_min, a) > threshold {
        mu_min -= 0.25;
    }
    let span = top - mu_min;
    let points = ((span / GRID_STEP).ceil() as usize).max(8) + 1;
    if points > MAX_GRID_POINTS {
        return Err(invalid(format!("threshold {a} too small for order {order}")));
    }
    let delta = span / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| mu_min + i as f64 * delta).collect();
    let nodes = Nodes::build(a, upper, params.psi_tol)?;

    let mut prev: Option<Level> = None;
    for k in 1..=order {
        let sup_prev = prev.as_ref().map_or(1.0, |l| l.sup);
        let tail_err = tail * sup_prev;
        let eval = |mu: f64| {
            let (v, e) = match &prev {
                None => nodes.integrate(mu, |_| (1.0, 0.0)),
                Some(level) => nodes.integrate(mu, |nu| level.eval(nu)),
            };
            (v, e + tail_err)
        };
        let (v, e) = eval(lambda);
        values.push(v.max(0.0));
        errs.push(e);
        if stop(&values, &errs) {
            break;
        }
        if k < order {
            let (vals, es): (Vec<f64>, Vec<f64>) = grid
                .par_iter()
                .map(|&mu| eval(mu))
                .map(|(v, e)| (v.max(0.0), e))
                .unzip();
            prev = Some(Level::new(mu_min, delta, vals, es));
        }
    }
    Ok(FactorialMomentTable {
        lambda,
        a,
        values,
        certified_abs_err: errs,
    })
}

/// `int_0^inf x (Lambda^lambda(x) - Lambda^0(x)) dx - lambda`.
pub fn weight_identity_residual(params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    params.validate()?;
    let lambda = params.lambda;
    let zero = params.at(0.0);
    let cap = lambda.max(0.0);
    let body = integrate_to_infinity(
        |x| {
            let d = drift_f_difference(x, lambda, 0.0);
            x * lam(x, &zero) * (-d).exp_m1()
        },
        0.0,
        spec,
        |x| 2.0 * intensity_tail_bound(x, cap, 1.0),
    )?;
    Ok(Integral {
        value: body.value - lambda,
        err_bound: body.err_bound,
    })
}

/// `int_0^inf x^3 Lambda - 2 - 2 lambda int_0^inf x^2 Lambda`.
pub fn cubic_identity_residual(params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    let m3 = power_moment(3.0, params, spec)?;
    let m2 = power_moment(2.0, params, spec)?;
    let lambda = params.lambda;
    Ok(Integral {
        value: m3.value - 2.0 - 2.0 * lambda * m2.value,
        err_bound: m3.err_bound + 2.0 * lambda.abs() * m2.err_bound,
    })
}

/// Both sides of `int x Lambda_1(x) dx = 1/4 int e^{-F(x, lambda)} dx`,
/// computed independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnicyclicWeight {
    pub lambda: f64,
    /// From the label-1 intensity.
    pub label_side: Integral,
    /// From the drift alone.
    pub drift_side: Integral,
}

fn drift_tail(x: f64, lambda: f64) -> f64 {
    // e^{-F} <= e^{-x (x - 2 lambda)^2 / 8}, log-concave past max(2 lambda, 0)
    let d = x - 2.0 * lambda;
    if d <= 0.0 {
        return f64::INFINITY;
    }
    let rate = (d * d + 2.0 * x * d) / 8.0;
    (-x * d * d / 8.0).exp() / rate
}

fn label_one_side(scale: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Integral> {
    let lambda = params.lambda;
    integrate_to_infinity(
        |x| scale * x * intensity_label(x, 1, params).unwrap_or(f64::NAN),
        0.0,
        spec,
        |x| scale.abs() * 0.25 * drift_tail(x, lambda),
    )
}

pub fn unicyclic_weight(params: &IntensityParams, spec: &QuadratureSpec) -> Result<UnicyclicWeight> {
    params.validate()?;
    let lambda = params.lambda;
    let label_side = label_one_side(1.0, params, spec)?;
    let drift = integrate_to_infinity(|x| (-drift_f(x, lambda)).exp(), 0.0, spec, |x| drift_tail(x, lambda))?;
    Ok(UnicyclicWeight {
        lambda,
        label_side,
        drift_side: Integral {
            value: 0.25 * drift.value,
            err_bound: 0.25 * drift.err_bound,
        },
    })
}
