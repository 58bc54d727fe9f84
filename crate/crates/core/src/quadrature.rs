//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.
//!
//! Intervals live in a max-heap keyed by their error estimate; the worst one
//! is bisected until the summed estimate meets the tolerance. The per-interval
//! estimate is the full `|K15 - G7|` difference (no QUADPACK damping), which
//! overstates the true error of the Kronrod result for smooth integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Truncation point for integrals to infinity. `None` picks the smallest
    /// point whose certified tail is at most `abs_tol / 10`.
    pub upper_cutoff: Option<f64>,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            upper_cutoff: None,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(invalid("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(invalid("max_subdivisions must be positive"));
        }
        if let Some(x) = self.upper_cutoff {
            if !(x > 0.0) {
                return Err(invalid("upper_cutoff must be positive"));
            }
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value of an integral with a bound on its error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub err_bound: f64,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        err_bound: 0.0,
    };
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral {
            value: self.value + rhs.value,
            err_bound: self.err_bound + rhs.err_bound,
        }
    }
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
pub(crate) const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let roundoff = 50.0 * f64::EPSILON * abs_sum * half.abs();
    let err = ((kronrod - gauss) * half).abs().max(roundoff);
    Segment {
        a,
        b,
        value,
        err: if err.is_nan() { f64::INFINITY } else { err },
    }
}

/// Integrates `f` over consecutive pieces `[breaks[i], breaks[i+1]]` with one
/// global error budget.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<Integral> {
    spec.validate()?;
    if breaks.len() < 2 {
        return Ok(Integral::ZERO);
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) || breaks.iter().any(|x| !x.is_finite()) {
        return Err(invalid("breakpoints must be finite and nondecreasing"));
    }
    let mut heap: BinaryHeap<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    if heap.is_empty() {
        return Ok(Integral::ZERO);
    }
    let mut subdivisions = heap.len();
    loop {
        let (value, err) = totals(&heap);
        if err <= spec.target(value) {
            return Ok(Integral { value, err_bound: err });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureBudget {
                estimate: value,
                bound: err,
            });
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval at floating-point resolution; keep its estimate
            heap.push(Segment {
                err: worst.err,
                ..worst
            });
            let (value, err) = totals(&heap);
            return Err(Error::QuadratureBudget {
                estimate: value,
                bound: err,
            });
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
        subdivisions += 1;
    }
}

fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err))
}

/// Integrates `f` over `(a, b]` after the substitution `x = a + (b - a) u^2`,
/// which turns an endpoint singularity like `(x - a)^(-1/2)` into a bounded
/// integrand and leaves smooth integrands smooth.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid("integrate needs finite limits"));
    }
    if a == b {
        spec.validate()?;
        return Ok(Integral::ZERO);
    }
    let width = b - a;
    let g = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        2.0 * width * u * f(a + width * u * u)
    };
    integrate_pieces(g, &[0.0, 1.0], spec)
}

/// Integrates a nonnegative, eventually log-concave integrand over
/// `(a, infinity)`.
///
/// `tail(x)` must return a certified bound on the integral over
/// `(x, infinity)`; it is added to the error bound. When `a == 0` the first
/// piece `(0, 1]` uses the square-root substitution of [`integrate`].
pub fn integrate_to_infinity<F, T>(f: F, a: f64, spec: &QuadratureSpec, tail: T) -> Result<Integral>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    spec.validate()?;
    if !(a >= 0.0) || !a.is_finite() {
        return Err(invalid("lower limit must be finite and nonnegative"));
    }
    let cutoff = match spec.upper_cutoff {
        Some(x) => x.max(a),
        None => find_cutoff(a, spec.abs_tol / 10.0, &tail)?,
    };
    let tail_bound = tail(cutoff);
    if !tail_bound.is_finite() {
        return Err(invalid(format!("no finite tail bound at cutoff {cutoff}")));
    }
    // the tail takes a tenth of the budget; the quadrature gets the rest
    let inner = QuadratureSpec {
        abs_tol: (spec.abs_tol - tail_bound).max(spec.abs_tol / 10.0),
        ..*spec
    };
    let body = if a == 0.0 {
        let first = cutoff.min(1.0);
        let head_spec = QuadratureSpec {
            abs_tol: inner.abs_tol / 2.0,
            ..inner
        };
        let head = integrate(&f, 0.0, first, &head_spec)?;
        let rest = integrate_pieces(&f, &geometric_breaks(first, cutoff), &head_spec)?;
        head + rest
    } else {
        integrate_pieces(&f, &geometric_breaks(a, cutoff), &inner)?
    };
    Ok(Integral {
        value: body.value,
        err_bound: body.err_bound + tail_bound,
    })
}

/// Breakpoints `a, 2a, 4a, ...` up to 1, then unit steps up to `b`.
pub fn geometric_breaks(a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![a];
    if b <= a {
        return out;
    }
    let mut x = a;
    while x * 2.0 < b.min(1.0) && x > 0.0 {
        x *= 2.0;
        out.push(x);
    }
    let mut next = x.floor() + 1.0;
    while next < b {
        if next > x {
            out.push(next);
            x = next;
        }
        next += 1.0;
    }
    out.push(b);
    out
}

/// Smallest `x >= a` (to bisection precision) with `tail(x) <= budget`,
/// assuming the bound decreases beyond its first success.
fn find_cutoff<T: Fn(f64) -> f64>(a: f64, budget: f64, tail: &T) -> Result<f64> {
    let ok = |x: f64| {
        let t = tail(x);
        t.is_finite() && t <= budget
    };
    if ok(a) && a > 0.0 {
        return Ok(a);
    }
    let mut hi = (a + 1.0).max(2.0 * a);
    let mut lo = a;
    let mut steps = 0;
    while !ok(hi) {
        lo = hi;
        hi *= 1.5;
        steps += 1;
        if steps > 200 {
            return Err(invalid("could not certify the integral tail"));
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
