//! Moments and moment generating function of the Brownian excursion area.
//!
//! The coefficients `w_l = E[L^l] / l!` of the area `L` under a normalized
//! Brownian excursion come from Takács' recurrence
//!
//! ```text
//! E[L^k] = 4 sqrt(pi) k! K_k / (2^(k/2) Gamma((3k - 1)/2))
//! K_0 = -1/2,  K_1 = 1/8,
//! K_k = (3k - 4)/4 K_{k-1} + sum_{j=1}^{k-1} K_j K_{k-j}   (k >= 2)
//! ```
//!
//! `K_k` and the gamma factor both grow factorially, so the recurrence is run
//! on `c_k = K_k / Gamma((3k - 1)/2)` in log space. Every term of the
//! recurrence is positive for `k >= 2`, so the log-sum-exp is stable.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest coefficient index held by the shared table.
///
/// The dominant term of `sum w_l t^l` sits near `l = t^2 / 12`; this order
/// certifies 1e-12 relative accuracy up to roughly `t = 130`.
pub const MAX_ORDER: usize = 2000;

/// Wright constants `w_0, ..., w_L`, stored together with their logarithms
/// (the linear values underflow past `l ~ 220`).
#[derive(Debug, Clone)]
pub struct WrightCoefficients {
    ln_values: Vec<f64>,
    values: Vec<f64>,
}

impl WrightCoefficients {
    pub fn order(&self) -> usize {
        self.ln_values.len() - 1
    }

    /// `w_l` in linear scale; zero once the value underflows.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ln_values(&self) -> &[f64] {
        &self.ln_values
    }

    pub fn get(&self, l: usize) -> f64 {
        self.values[l]
    }

    pub fn ln_get(&self, l: usize) -> f64 {
        self.ln_values[l]
    }

    /// `ln E[L^l] = ln w_l + ln l!`.
    pub fn ln_moment(&self, l: usize) -> f64 {
        self.ln_values[l] + ln_gamma(l as f64 + 1.0)
    }
}

/// Leading-order growth of the excursion-area moments,
/// `E[L^l] ~ sqrt(18) l (12 e)^(-l/2) l^(l/2)`, in log form.
pub fn ln_moment_asymptotic(l: usize) -> f64 {
    let l = l as f64;
    0.5 * 18f64.ln() + l.ln() - 0.5 * l * (12.0f64.ln() + 1.0) + 0.5 * l * l.ln()
}

/// Computes `w_0, ..., w_order`.
pub fn wright_coefficients(order: usize) -> Result<WrightCoefficients> {
    if order > MAX_ORDER {
        return Err(Error::OrderOutOfRange { order, max: MAX_ORDER });
    }
    let full = wright_table();
    Ok(WrightCoefficients {
        ln_values: full.ln_values[..=order].to_vec(),
        values: full.values[..=order].to_vec(),
    })
}

/// The shared read-only table of order [`MAX_ORDER`].
pub fn wright_table() -> &'static WrightCoefficients {
    static TABLE: OnceLock<WrightCoefficients> = OnceLock::new();
    TABLE.get_or_init(|| build_table(MAX_ORDER))
}

fn build_table(order: usize) -> WrightCoefficients {
    // lg[k] = ln Gamma((3k - 1)/2), k >= 1
    let lg: Vec<f64> = (0..=order)
        .map(|k| {
            if k == 0 {
                f64::NAN
            } else {
                ln_gamma((3 * k) as f64 / 2.0 - 0.5)
            }
        })
        .collect();
    // ln c_k with c_k = K_k / Gamma((3k - 1)/2)
    let mut ln_c = vec![f64::NAN; order + 1];
    if order >= 1 {
        ln_c[1] = (0.125f64).ln();
    }
    let mut terms = Vec::with_capacity(order);
    for k in 2..=order {
        terms.clear();
        let kf = k as f64;
        terms.push(((3.0 * kf - 4.0) / 4.0).ln() + ln_c[k - 1] + lg[k - 1] - lg[k]);
        for j in 1..=k / 2 {
            let t = ln_c[j] + ln_c[k - j] + lg[j] + lg[k - j] - lg[k];
            terms.push(t);
            if j != k - j {
                terms.push(t);
            }
        }
        ln_c[k] = log_sum_exp(&terms);
    }

    let ln_prefactor = 4.0f64.ln() + 0.5 * std::f64::consts::PI.ln();
    let mut ln_values = Vec::with_capacity(order + 1);
    ln_values.push(0.0);
    for (k, &lc) in ln_c.iter().enumerate().skip(1) {
        ln_values.push(ln_prefactor - 0.5 * k as f64 * std::f64::consts::LN_2 + lc);
    }
    // w_1 = sqrt(pi/8) exactly; pin it against rounding in the log round trip
    if order >= 1 {
        ln_values[1] = (std::f64::consts::PI / 8.0).sqrt().ln();
    }
    let values = ln_values.iter().map(|v| v.exp()).collect();
    WrightCoefficients { ln_values, values }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// One evaluation of `Psi(t) = sum_l w_l t^l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfEvaluation {
    pub argument: f64,
    /// `Psi(t)`; may be `inf` for very large arguments, see `ln_value`.
    pub value: f64,
    pub ln_value: f64,
    /// Highest index included in the partial sum.
    pub truncation_order: usize,
    /// Bound on the omitted tail `sum_{l > order} w_l t^l`.
    pub tail_bound: f64,
}

/// Evaluates `Psi(t)` with the omitted tail bounded by
/// `tol * max(1, Psi(t))`.
///
/// The tail is certified by a geometric comparison: once the term ratio
/// `r_l = w_{l+1} t / w_l` drops below 1, the log-concavity of `w_l`
/// (checked over the whole table in the tests) makes every later ratio
/// smaller, so the tail is at most `term_l r_l / (1 - r_l)`.
pub fn psi(t: f64, tol: f64) -> Result<MgfEvaluation> {
    let eval = psi_unchecked(t, tol)?;
    if !eval.value.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Psi({t}) overflows double precision; use ln_value via ln_psi"
        )));
    }
    Ok(eval)
}

/// `ln Psi(t)` together with the relative tail bound. Usable for arguments
/// where `Psi` itself overflows.
pub fn ln_psi(t: f64, tol: f64) -> Result<(f64, f64)> {
    let eval = psi_unchecked(t, tol)?;
    let rel = if eval.tail_bound == 0.0 {
        0.0
    } else {
        (eval.tail_bound.ln() - eval.ln_value).exp()
    };
    Ok((eval.ln_value, rel))
}

fn psi_unchecked(t: f64, tol: f64) -> Result<MgfEvaluation> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("psi argument {t} must be >= 0")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("psi tolerance {tol} must be > 0")));
    }
    if t == 0.0 {
        return Ok(MgfEvaluation {
            argument: 0.0,
            value: 1.0,
            ln_value: 0.0,
            truncation_order: 0,
            tail_bound: 0.0,
        });
    }
    let table = wright_table();
    let lw = table.ln_values();
    let ln_t = t.ln();
    // scale terms by exp(-shift) so that large arguments do not overflow
    let shift = if t > 20.0 { t * t / 24.0 } else { 0.0 };

    let mut sum = 0.0;
    let mut best_rel = f64::INFINITY;
    for l in 0..MAX_ORDER {
        let term = (lw[l] + l as f64 * ln_t - shift).exp();
        sum += term;
        let ln_r = lw[l + 1] - lw[l] + ln_t;
        if ln_r < 0.0 {
            let r = ln_r.exp();
            let tail = term * r / (1.0 - r);
            // tolerance is absolute for Psi <= 1 and relative above
            let scale = sum.max((-shift).exp());
            if scale > 0.0 {
                best_rel = best_rel.min(tail / scale);
            }
            if tail <= tol * scale {
                let ln_value = sum.ln() + shift;
                return Ok(MgfEvaluation {
                    argument: t,
                    value: ln_value.exp(),
                    ln_value,
                    truncation_order: l,
                    tail_bound: (tail.ln() + shift).exp(),
                });
            }
        }
    }
    let best_bound = if best_rel.is_finite() {
        best_rel * (sum.ln() + shift).exp().max(1.0)
    } else {
        f64::INFINITY
    };
    Err(Error::PrecisionUnachievable { best_bound, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    // Takács' K_k evaluated by hand from the recurrence:
    // K_2 = 2/4 * 1/8 + 1/64 = 5/64
    // K_3 = 5/4 * 5/64 + 2 * (1/8)(5/64) = 15/128
    // K_4 = 2 * 15/128 + 2 * (1/8)(15/128) + (5/64)^2 = 1105/4096
    // giving E L^2 = 5/12, E L^3 = 15 sqrt(2 pi)/128, E L^4 = 221/1008,
    // the values Louchard and Takács publish for the excursion area.
    const EL2: f64 = 5.0 / 12.0;
    const EL4: f64 = 221.0 / 1008.0;
    fn el3() -> f64 {
        15.0 * (2.0 * PI).sqrt() / 128.0
    }

    #[test]
    fn anchored_values() {
        let w = wright_coefficients(1).unwrap();
        assert_eq!(w.values(), &[1.0, w.get(1)]);
        assert!((w.get(1) - (PI / 8.0).sqrt()).abs() < 1e-12);
        assert_eq!(wright_coefficients(0).unwrap().values(), &[1.0]);
    }

    #[test]
    fn low_moments_match_closed_forms() {
        let w = wright_table();
        assert!((w.get(2) - EL2 / 2.0).abs() < 1e-13);
        assert!((w.get(3) - el3() / 6.0).abs() < 1e-13);
        assert!((w.get(4) - EL4 / 24.0).abs() < 1e-13);
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(
            wright_coefficients(MAX_ORDER + 1),
            Err(Error::OrderOutOfRange { .. })
        ));
    }

    #[test]
    fn growth_matches_asymptotic_within_factor_two() {
        let w = wright_table();
        for l in 30..=MAX_ORDER {
            let ratio = (w.ln_moment(l) - ln_moment_asymptotic(l)).exp();
            assert!((0.5..=2.0).contains(&ratio), "l={l} ratio={ratio}");
        }
        // it is in fact much closer than a factor two by l = 100
        let ratio = (w.ln_moment(100) - ln_moment_asymptotic(100)).exp();
        assert!((ratio - 1.0).abs() < 0.01);
    }

    #[test]
    fn coefficients_positive_and_log_concave() {
        let lw = wright_table().ln_values();
        assert!(lw.iter().all(|v| v.is_finite()));
        for l in 1..lw.len() - 1 {
            assert!(lw[l + 1] - lw[l] <= lw[l] - lw[l - 1], "ratio increases at l={l}");
        }
    }

    #[test]
    fn scaled_moments_eventually_nondecreasing() {
        let w = wright_table();
        let ln_moments: Vec<f64> = (0..=MAX_ORDER).map(|l| w.ln_moment(l)).collect();
        // E L = 0.63 < 1 so the moments dip first, then grow
        let start = (1..MAX_ORDER).find(|&l| ln_moments[l + 1] >= ln_moments[l]).unwrap();
        assert!(start < 20);
        for l in start..MAX_ORDER {
            assert!(ln_moments[l + 1] >= ln_moments[l]);
        }
    }

    #[test]
    fn psi_at_zero_is_one() {
        let e = psi(0.0, 1e-12).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.tail_bound, 0.0);
    }

    #[test]
    fn psi_at_one() {
        // 30-digit evaluation of the recurrence, 400 terms, done offline
        const PSI_1: f64 = 1.894_751_495_455_332_9;
        let e = psi(1.0, 1e-15).unwrap();
        assert!((e.value - PSI_1).abs() < 1e-14, "{}", e.value);
        assert!(e.tail_bound <= 1e-15);
        // bracket from the hand-derived coefficients alone
        let head = 1.0 + (PI / 8.0).sqrt() + EL2 / 2.0 + el3() / 6.0 + EL4 / 24.0;
        assert!(e.value > head && e.value < head + 2e-3);
    }

    #[test]
    fn psi_large_argument_ratio() {
        let asym = |t: f64| 0.5 * t * t * (t * t / 24.0).exp();
        let r30 = psi(30.0, 1e-12).unwrap().value / asym(30.0);
        assert!((0.8..=1.2).contains(&r30), "{r30}");
        let r40 = psi(40.0, 1e-12).unwrap().value / asym(40.0);
        assert!((0.9..=1.1).contains(&r40), "{r40}");
    }

    #[test]
    fn ln_psi_beyond_overflow() {
        let (ln, rel) = ln_psi(130.0, 1e-12).unwrap();
        let asym = (0.5 * 130.0f64 * 130.0).ln() + 130.0 * 130.0 / 24.0;
        assert!(rel <= 1e-12);
        assert!((ln - asym).abs() < 1e-2);
        assert!(psi(130.0, 1e-12).is_err());
        assert!(psi(120.0, 1e-12).unwrap().value.is_finite());
    }

    #[test]
    fn precision_unachievable_reports_bound() {
        match psi(400.0, 1e-12) {
            Err(Error::PrecisionUnachievable { best_bound, tol }) => {
                assert_eq!(tol, 1e-12);
                assert!(best_bound > tol);
            }
            other => panic!("expected precision error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(psi(-1.0, 1e-9).is_err());
        assert!(psi(1.0, 0.0).is_err());
        assert!(psi(f64::NAN, 1e-9).is_err());
    }

    proptest! {
        #[test]
        fn psi_strictly_increasing(t1 in 0.0f64..60.0, dt in 1e-3f64..5.0) {
            let a = psi(t1, 1e-13).unwrap().value;
            let b = psi(t1 + dt, 1e-13).unwrap().value;
            prop_assert!(b > a);
        }

        #[test]
        fn psi_convex(t in 0.5f64..55.0, h in 1e-2f64..0.5) {
            let tol = 1e-13;
            let f = |x: f64| psi(x, tol).unwrap().value;
            let second = f(t - h) - 2.0 * f(t) + f(t + h);
            prop_assert!(second >= -4.0 * tol * f(t + h).max(1.0));
        }

        #[test]
        fn halving_tolerance_is_consistent(t in 0.0f64..60.0, e in 3u32..12) {
            let tol = 10f64.powi(-(e as i32));
            let a = psi(t, tol).unwrap();
            let b = psi(t, tol / 2.0).unwrap();
            prop_assert!((a.value - b.value).abs() <= tol * a.value.max(1.0));
            prop_assert!(a.tail_bound <= tol * a.value.max(1.0));
            prop_assert!(a.value >= 1.0);
        }
    }
}
