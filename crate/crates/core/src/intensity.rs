//! Intensities of the limiting point process and of its labelled parts.
//!
//! ```text
//! F(x, lambda)      = x^3/6 - x^2 lambda/2 + x lambda^2/2
//! Lambda_l(x)       = (2 pi)^(-1/2) w_l x^(3l/2 - 5/2) e^{-F(x, lambda)}
//! Lambda^lambda(x)  = (2 pi)^(-1/2) x^(-5/2) Psi(x^(3/2)) e^{-F(x, lambda)}
//! P_x(l)            = w_l x^(3l/2) / Psi(x^(3/2))
//! ```
//!
//! Everything is evaluated in log space; `e^{-F}` only underflows to an exact
//! zero once the whole log-intensity is below the double-precision range.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::excursion_mgf::{ln_psi, psi, wright_table, MAX_ORDER};
use crate::quadrature::{integrate_pieces, QuadratureSpec};

pub const DEFAULT_MAX_LABEL: usize = 64;
pub const DEFAULT_PSI_TOL: f64 = 1e-13;

/// `-ln sqrt(2 pi)`
const LN_INV_SQRT_2PI: f64 = -0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityParams {
    pub lambda: f64,
    pub psi_tol: f64,
    pub max_label: usize,
}

impl IntensityParams {
    pub fn new(lambda: f64) -> Self {
        IntensityParams {
            lambda,
            psi_tol: DEFAULT_PSI_TOL,
            max_label: DEFAULT_MAX_LABEL,
        }
    }

    /// Same controls at another window parameter.
    pub fn at(&self, lambda: f64) -> Self {
        IntensityParams { lambda, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(invalid("lambda must be finite"));
        }
        if !(self.psi_tol > 0.0) {
            return Err(invalid("psi_tol must be positive"));
        }
        if self.max_label > MAX_ORDER {
            return Err(Error::OrderOutOfRange {
                order: self.max_label,
                max: MAX_ORDER,
            });
        }
        Ok(())
    }
}

/// `F(x, lambda)`, evaluated as `x^3/24 + x (x - 2 lambda)^2 / 8` so that
/// every term is nonnegative.
pub fn drift_f(x: f64, lambda: f64) -> f64 {
    let d = x - 2.0 * lambda;
    x * x * x / 24.0 + x * d * d / 8.0
}

/// `F(x, mu) - F(x, lambda)` without cancellation for small `x`.
pub fn drift_f_difference(x: f64, mu: f64, lambda: f64) -> f64 {
    // F = x^3/6 - x^2 lambda/2 + x lambda^2/2
    x * (mu - lambda) * (0.5 * (mu + lambda) - 0.5 * x)
}

/// `ln[(2 pi)^(-1/2) x^(-5/2) Psi(x^(3/2))]`, the lambda-free part of the
/// total intensity.
pub fn ln_intensity_base(x: f64, psi_tol: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(invalid(format!("intensity needs x > 0, got {x}")));
    }
    let (lp, _) = ln_psi(x.powf(1.5), psi_tol)?;
    Ok(LN_INV_SQRT_2PI - 2.5 * x.ln() + lp)
}

pub fn ln_intensity_total(x: f64, params: &IntensityParams) -> Result<f64> {
    Ok(ln_intensity_base(x, params.psi_tol)? - drift_f(x, params.lambda))
}

/// `Lambda^lambda(x)`.
pub fn intensity_total(x: f64, params: &IntensityParams) -> Result<f64> {
    Ok(ln_intensity_total(x, params)?.exp())
}

/// `Lambda_l(x)`, the intensity of points carrying label `l`.
pub fn intensity_label(x: f64, label: usize, params: &IntensityParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(invalid(format!("intensity needs x > 0, got {x}")));
    }
    if label > MAX_ORDER {
        return Err(Error::OrderOutOfRange {
            order: label,
            max: MAX_ORDER,
        });
    }
    let lw = wright_table().ln_get(label);
    let exponent = 1.5 * label as f64 - 2.5;
    Ok((LN_INV_SQRT_2PI + lw + exponent * x.ln() - drift_f(x, params.lambda)).exp())
}

/// Law of the complexity label of a point at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub x: f64,
    /// `masses[l] = P_x(l)` for `l = 0..=max_label`.
    pub masses: Vec<f64>,
    /// Probability of a label above `max_label`.
    pub tail_mass: f64,
}

pub fn label_distribution(x: f64, params: &IntensityParams) -> Result<LabelDistribution> {
    params.validate()?;
    if !(x > 0.0) {
        return Err(invalid(format!("label law needs x > 0, got {x}")));
    }
    let t = x.powf(1.5);
    let (lp, _) = ln_psi(t, params.psi_tol)?;
    let lw = wright_table().ln_values();
    let ln_t = t.ln();
    let masses: Vec<f64> = (0..=params.max_label)
        .map(|l| (lw[l] + l as f64 * ln_t - lp).exp().min(1.0))
        .collect();
    let head: f64 = masses.iter().sum();
    let tail_mass = (1.0 - head).max(0.0);
    Ok(LabelDistribution { x, masses, tail_mass })
}

/// Parameter of the Palm-conditioned process: conditioning on a point at `s`
/// leaves the process at `lambda - s` plus an atom at `s`.
pub fn palm_shift(lambda: f64, s: f64) -> f64 {
    lambda - s
}

/// Constant `C` with `Psi(t) e^{-t^2/24} <= C (1 + t^2)` for all `t >= 0`.
///
/// Computed by scanning the certified range of `Psi`; past it the ratio
/// `Psi(t) / (t^2/2 e^{t^2/24})` stays below one, which `C >= 1/2` covers.
pub fn psi_envelope_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let mut best: f64 = 0.5;
        let mut t = 0.0;
        while t <= 125.0 {
            let (lp, _) = ln_psi(t, 1e-12).expect("psi in certified range");
            best = best.max((lp - t * t / 24.0 - (1.0 + t * t).ln()).exp());
            t += 0.05;
        }
        best * 1.05
    })
}

/// Upper bound on `int_X^inf x^q Lambda^mu(x) dx`, valid for every
/// `mu <= lambda`.
///
/// Uses `Lambda^mu(x) <= (2 pi)^(-1/2) C x^(-5/2) (1 + x^3) e^{-x (x - 2 lambda)^2 / 8}`
/// (from `F = x^3/24 + x (x - 2 mu)^2/8` and [`psi_envelope_constant`]); for
/// `X >= max(2^(1/3), 4 lambda / 3)` the envelope is log-concave, so the tail
/// is at most envelope/decay-rate at `X`. Returns infinity where that argument
/// does not apply.
pub fn intensity_tail_bound(cutoff: f64, lambda: f64, q: f64) -> f64 {
    let x = cutoff;
    if !(x >= 1.26) || x <= 4.0 * lambda / 3.0 || q < 0.0 {
        return f64::INFINITY;
    }
    let d = x - 2.0 * lambda;
    if d <= 0.0 {
        return f64::INFINITY;
    }
    let rate = (d * d + 2.0 * x * d) / 8.0 - (q + 0.5) / x;
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    // x^(q - 5/2) (1 + x^3) <= 2 x^(q + 1/2) for x >= 1
    let ln_env =
        LN_INV_SQRT_2PI + psi_envelope_constant().ln() + std::f64::consts::LN_2 + (q + 0.5) * x.ln() - x * d * d / 8.0;
    ln_env.exp() / rate
}

/// Label law of a point drawn from the intensity restricted to `[a, b]`:
/// `int_a^b Lambda_l / int_a^b Lambda` for `l = 0..=max_label`.
pub fn window_label_law(a: f64, b: f64, params: &IntensityParams, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    params.validate()?;
    if !(a > 0.0 && b > a) {
        return Err(invalid("window must satisfy 0 < a < b"));
    }
    let total = integrate_pieces(|x| intensity_total(x, params).unwrap_or(f64::NAN), &[a, b], spec)?;
    (0..=params.max_label)
        .map(|l| {
            let part = integrate_pieces(|x| intensity_label(x, l, params).unwrap_or(f64::NAN), &[a, b], spec)?;
            Ok(part.value / total.value)
        })
        .collect()
}

/// `Psi(x^(3/2))`, exposed for tabulation.
pub fn psi_at(x: f64, params: &IntensityParams) -> Result<f64> {
    Ok(psi(x.powf(1.5), params.psi_tol)?.value)
}

/// `(2 pi)^(-1/2)`
pub fn inv_sqrt_2pi() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}
