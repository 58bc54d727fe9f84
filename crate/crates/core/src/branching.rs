//! Total progeny of a Galton–Watson process with Poisson offspring.
//!
//! With `Po(m)` offspring the total progeny `T` has the Borel law
//! `P(T = k) = (k m)^(k-1) e^{-k m} / k!`, and `T = inf` with the survival
//! probability `q`, the largest root of `1 - q = e^{-m q}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, integrate_pieces, Integral, QuadratureSpec};

/// `ln sqrt(2 pi)`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProgenySize {
    Finite(u64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgenyQuery {
    pub offspring_mean: f64,
    pub size: ProgenySize,
}

impl ProgenyQuery {
    pub fn probability(&self) -> Result<f64> {
        if !(self.offspring_mean > 0.0) || !self.offspring_mean.is_finite() {
            return Err(invalid("offspring mean must be positive"));
        }
        match self.size {
            ProgenySize::Finite(0) => Ok(0.0),
            ProgenySize::Finite(k) => Ok(borel_pmf(k, self.offspring_mean)),
            ProgenySize::Infinite => Ok(survival_probability(self.offspring_mean)),
        }
    }
}

/// `ln k! - (k + 1/2) ln k + k - ln sqrt(2 pi)` for `k >= 20`.
fn stirling_correction(k: f64) -> f64 {
    let r = 1.0 / (k * k);
    (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / k
}

/// `ln P(T = k)` for offspring mean `1 + delta`.
fn borel_ln_pmf(k: u64, delta: f64) -> f64 {
    let kf = k as f64;
    let ln_mean = delta.ln_1p();
    if k < 20 {
        let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
        return (kf - 1.0) * (kf.ln() + ln_mean) - kf * (1.0 + delta) - ln_fact;
    }
    // k^(k-1) / k! = e^k / (sqrt(2 pi) k^(3/2) e^{corr})
    (kf - 1.0) * ln_mean - kf * delta - 1.5 * kf.ln() - LN_SQRT_2PI - stirling_correction(kf)
}

/// `P(T = k)` for Poisson offspring with the given mean; zero for `k = 0`.
pub fn borel_pmf(k: u64, mean: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    borel_ln_pmf(k, mean - 1.0).exp()
}

/// Survival probability of the process with `Po(alpha)` offspring.
pub fn survival_probability(alpha: f64) -> f64 {
    if !(alpha > 1.0) {
        return 0.0;
    }
    if alpha.is_infinite() {
        return 1.0;
    }
    // the nonzero root of (1 - e^{-alpha q})/q = 1; the left side decreases in q
    let h = |q: f64| -(-alpha * q).exp_m1() / q - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid > 0.0 && h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut q = 0.5 * (lo + hi);
    // Newton polish on g(q) = 1 - q - e^{-alpha q}
    for _ in 0..3 {
        let e = (-alpha * q).exp();
        let g = 1.0 - q - e;
        let dg = alpha * e - 1.0;
        if dg == 0.0 {
            break;
        }
        let next = q - g / dg;
        if !(next > lo && next < hi) {
            break;
        }
        q = next;
    }
    q
}

/// `u_eps(lambda)` from both of its integral representations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UEps {
    pub lambda: f64,
    pub eps: f64,
    /// `2 max(lambda, 0) + int_eps^inf (2 pi)^(-1/2) x^(-3/2) e^{-lambda^2 x / 2} dx`
    pub tail_form: Integral,
    /// `(2/pi)^(1/2) eps^(-1/2) + lambda + int_0^eps (2 pi)^(-1/2) x^(-3/2) (1 - e^{-lambda^2 x / 2}) dx`
    pub smooth_form: Integral,
}

impl UEps {
    pub fn value(&self) -> f64 {
        self.smooth_form.value
    }
}

pub fn u_eps(lambda: f64, eps: f64, spec: &QuadratureSpec) -> Result<UEps> {
    if !lambda.is_finite() {
        return Err(invalid("lambda must be finite"));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let c = 0.5 * lambda * lambda;
    let k = 1.0 / (2.0 * PI).sqrt();

    // x = eps / u^2 maps (eps, inf) onto (0, 1]
    let scale = 2.0 * k / eps.sqrt();
    let tail = integrate_pieces(
        |u: f64| {
            if u == 0.0 {
                if c == 0.0 {
                    scale
                } else {
                    0.0
                }
            } else {
                scale * (-c * eps / (u * u)).exp()
            }
        },
        &[0.0, 1.0],
        spec,
    )?;
    let tail_form = Integral {
        value: 2.0 * lambda.max(0.0) + tail.value,
        err_bound: tail.err_bound,
    };

    let head = integrate(|x| k * x.powf(-1.5) * -(-c * x).exp_m1(), 0.0, eps, spec)?;
    let smooth_form = Integral {
        value: (2.0 / PI).sqrt() / eps.sqrt() + lambda + head.value,
        err_bound: head.err_bound,
    };

    let gap = (tail_form.value - smooth_form.value).abs();
    let allowed = tail_form.err_bound + smooth_form.err_bound + 64.0 * f64::EPSILON * tail_form.value.abs();
    if gap > allowed {
        return Err(Error::PrecisionUnachievable {
            best_bound: gap,
            tol: allowed,
        });
    }
    Ok(UEps {
        lambda,
        eps,
        tail_form,
        smooth_form,
    })
}

/// `n^(1/3) P(T >= eps n^(2/3))` for offspring `Po(1 + lambda n^(-1/3))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgenyTail {
    pub lambda: f64,
    pub eps: f64,
    pub n: u64,
    pub value: f64,
    /// The part of `value` from infinite progeny.
    pub survival_part: f64,
}

/// Exact finite-`n` scaled tail. `P(T >= k0)` is taken as one minus the
/// finite head `P(T < k0)`, so the infinite-progeny mass is included without
/// summing a slowly decaying tail.
pub fn progeny_tail_scaled(lambda: f64, eps: f64, n: u64) -> Result<ProgenyTail> {
    if n < 1000 {
        return Err(invalid(format!("n must be at least 1000, got {n}")));
    }
    if !(eps > 0.0) || !eps.is_finite() || !lambda.is_finite() {
        return Err(invalid("eps must be positive and lambda finite"));
    }
    let nf = n as f64;
    let delta = lambda * nf.powf(-1.0 / 3.0);
    if !(delta > -1.0) {
        return Err(invalid("offspring mean must be positive"));
    }
    let k0 = (eps * nf.powf(2.0 / 3.0)).ceil().max(1.0) as u64;
    let mut head = 0.0;
    let mut comp = 0.0;
    for k in 1..k0 {
        // Kahan summation: the complement is small next to the head
        let y = borel_ln_pmf(k, delta).exp() - comp;
        let t = head + y;
        comp = (t - head) - y;
        head = t;
    }
    let scale = nf.cbrt();
    Ok(ProgenyTail {
        lambda,
        eps,
        n,
        value: scale * (1.0 - head).max(0.0),
        survival_part: scale * survival_probability(1.0 + delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::IntensityParams;
    use crate::moments::expected_weight;
    use proptest::prelude::*;

    fn tight() -> QuadratureSpec {
        QuadratureSpec::with_tolerances(1e-13, 1e-13)
    }

    #[test]
    fn small_progeny() {
        assert!((borel_pmf(1, 1.0) - (-1f64).exp()).abs() < 1e-16);
        // one child, which is childless
        assert!((borel_pmf(2, 1.0) - (-1f64).exp() * (-1f64).exp()).abs() < 1e-16);
        assert_eq!(borel_pmf(0, 1.0), 0.0);
    }

    #[test]
    fn stirling_branch_is_continuous() {
        for mean in [0.5, 1.0, 1.3] {
            for k in [20u64, 25, 40] {
                let kf = k as f64;
                let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
                let direct = (kf - 1.0) * (kf * mean).ln() - kf * mean - ln_fact;
                assert!((borel_pmf(k, mean).ln() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn critical_law_is_proper() {
        // head sum plus the tail sum_{k > K} (2 pi)^(-1/2) k^(-3/2) (1 - 1/(12k) + ...)
        let big_k = 1_000_000u64;
        let head: f64 = (1..=big_k).map(|k| borel_pmf(k, 1.0)).sum();
        let x = big_k as f64 + 0.5;
        let tail = (2.0 / (2.0 * PI).sqrt()) * (x.powf(-0.5) - x.powf(-1.5) / 36.0);
        assert!((head + tail - 1.0).abs() < 1e-8, "{}", head + tail - 1.0);
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival_probability(1.0), 0.0);
        assert_eq!(survival_probability(0.3), 0.0);
        // independent bisection on 1 - q - e^{-2q}
        let (mut lo, mut hi) = (0.5f64, 1.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 1.0 - mid - (-2.0 * mid).exp() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = survival_probability(2.0);
        assert!((q - lo).abs() < 1e-12 && (q - 0.79681).abs() < 1e-5, "{q}");
        let delta = 1e-4;
        let ratio = survival_probability(1.0 + delta) / (2.0 * delta);
        assert!((0.99..=1.01).contains(&ratio), "{ratio}");
    }

    #[test]
    fn query_dispatch() {
        let q = ProgenyQuery {
            offspring_mean: 2.0,
            size: ProgenySize::Infinite,
        };
        assert_eq!(q.probability().unwrap(), survival_probability(2.0));
        let q = ProgenyQuery {
            offspring_mean: 1.0,
            size: ProgenySize::Finite(1),
        };
        assert_eq!(q.probability().unwrap(), borel_pmf(1, 1.0));
        let bad = ProgenyQuery {
            offspring_mean: 0.0,
            size: ProgenySize::Infinite,
        };
        assert!(bad.probability().is_err());
    }

    #[test]
    fn u_eps_examples() {
        let r = (2.0 / PI).sqrt();
        assert!((u_eps(0.0, 1.0, &tight()).unwrap().value() - r).abs() < 1e-12);
        assert!((u_eps(0.0, 0.04, &tight()).unwrap().value() - 5.0 * r).abs() < 1e-12);
        let u = u_eps(1.0, 0.01, &tight()).unwrap().value();
        assert!((u - 9.0188).abs() < 1e-3, "{u}");
    }

    #[test]
    fn u_eps_forms_agree() {
        for lambda in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            for eps in [0.01, 0.1, 1.0] {
                let u = u_eps(lambda, eps, &tight()).unwrap();
                assert!(
                    (u.tail_form.value - u.smooth_form.value).abs() < 1e-9,
                    "{lambda} {eps}: {u:?}"
                );
            }
        }
    }

    #[test]
    fn u_eps_is_smooth_at_zero() {
        let eps = 0.1;
        let u = |l: f64| u_eps(l, eps, &tight()).unwrap().value();
        for h in [0.1, 0.01] {
            let slope = (u(h / 10.0) - u(-h / 10.0)) / (h / 5.0);
            let residual = (u(h) - u(0.0) - h * slope).abs();
            assert!(residual <= h * h, "{h}: {residual}");
        }
    }

    #[test]
    fn sandwich_around_expected_weight() {
        let spec = QuadratureSpec::default();
        for lambda in [-1.0, 0.0, 1.0] {
            for eps in [0.1, 0.01] {
                let w = expected_weight(eps, &IntensityParams::new(lambda), &spec).unwrap();
                let lo = u_eps(lambda - eps, eps, &tight()).unwrap().value();
                let hi = u_eps(lambda, eps, &tight()).unwrap().value();
                let slack = w.err_bound + 1e-10;
                assert!(
                    lo <= w.value + slack && w.value <= hi + slack,
                    "{lambda} {eps}: {lo} {} {hi}",
                    w.value
                );
            }
        }
    }

    #[test]
    fn finite_n_converges() {
        let limit = u_eps(0.0, 1.0, &tight()).unwrap().value();
        let t6 = progeny_tail_scaled(0.0, 1.0, 1_000_000).unwrap();
        let t8 = progeny_tail_scaled(0.0, 1.0, 100_000_000).unwrap();
        assert!((t6.value / limit - 1.0).abs() <= 0.05, "{}", t6.value);
        assert!((t8.value - limit).abs() <= (t6.value - limit).abs() + 1e-3);
        assert_eq!(t6.survival_part, 0.0);
        let sub = progeny_tail_scaled(-1.0, 0.5, 1_000_000).unwrap();
        assert_eq!(sub.survival_part, 0.0);
        let sup = progeny_tail_scaled(1.0, 0.5, 1_000_000).unwrap();
        assert!(sup.survival_part > 0.0 && sup.survival_part < sup.value);
        assert!(progeny_tail_scaled(0.0, 1.0, 999).is_err());
    }

    proptest! {
        #[test]
        fn survival_solves_its_equation(alpha in 1.001f64..20.0) {
            let q = survival_probability(alpha);
            prop_assert!(q > 0.0 && q < 1.0);
            prop_assert!((1.0 - q - (-alpha * q).exp()).abs() < 1e-12);
        }

        #[test]
        fn u_eps_increases_in_lambda(lambda in -3.0f64..3.0, eps in 0.01f64..2.0) {
            let a = u_eps(lambda, eps, &tight()).unwrap().value();
            let b = u_eps(lambda + 0.1, eps, &tight()).unwrap().value();
            prop_assert!(b > a);
        }
    }
}
