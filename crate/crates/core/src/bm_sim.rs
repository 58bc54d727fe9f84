//! Excursions of reflected Brownian motion with parabolic drift.
//!
//! `W(s) = B(s) + lambda s - s^2/2` is discretized with step `h`; the
//! reflected path is `W` minus its running minimum, and each maximal run
//! where it is positive is one excursion. Excursion lengths are a sample of
//! the limiting point process and a Poisson mark with mean equal to the
//! excursion area is its complexity label.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::points::PointSample;
use crate::records::{Sampler, SimulationRecord};
use crate::rng::substream;

/// Key mixed into the seed for the mark streams.
const MARK_KEY: u64 = 0x6d61_726b_7320_2020;
const MAX_STEPS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub step: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Shorter excursions are not recorded.
    pub min_excursion: f64,
}

/// `max(12, 2 lambda + 8 / max(1, |lambda|)^(1/3) + 4)`
pub fn default_horizon(lambda: f64) -> f64 {
    (2.0 * lambda + 8.0 / lambda.abs().max(1.0).cbrt() + 4.0).max(12.0)
}

impl PathConfig {
    /// Step `min_excursion / 1000` and the default horizon.
    pub fn for_lambda(lambda: f64, seed: u64, min_excursion: f64) -> Self {
        PathConfig {
            step: min_excursion / 1000.0,
            horizon: default_horizon(lambda),
            seed,
            min_excursion,
        }
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.step).round() as u64
    }

    pub fn validate(&self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() {
            return Err(invalid("lambda must be finite"));
        }
        if !(self.min_excursion > 0.0 && self.step > 0.0) {
            return Err(invalid("step and min_excursion must be positive"));
        }
        if self.step > self.min_excursion / 20.0 {
            return Err(invalid("step must be at most min_excursion / 20"));
        }
        if !self.horizon.is_finite() || self.horizon / self.step > MAX_STEPS {
            return Err(invalid("horizon too long for the step"));
        }
        let t = self.horizon;
        if lambda * t - t * t / 2.0 > -(lambda * lambda / 2.0 + 1.0) {
            return Err(invalid(format!(
                "horizon {t} ends before the drift has turned down enough"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub start: f64,
    pub length: f64,
    /// Trapezoidal area under the reflected path.
    pub area: f64,
    pub mark_count: u64,
}

/// Excursions of one discretized path driven by standard normal increments
/// from `noise`, with marks drawn from `marks`. An excursion still open at
/// the horizon is dropped.
pub fn excursions_from_noise<N, R>(lambda: f64, cfg: &PathConfig, mut noise: N, marks: &mut R) -> Vec<ExcursionRecord>
where
    N: FnMut() -> f64,
    R: Rng,
{
    let h = cfg.step;
    let sqrt_h = h.sqrt();
    let mut out = Vec::new();
    let (mut w, mut min) = (0.0f64, 0.0f64);
    let (mut open, mut start, mut area, mut prev) = (false, 0u64, 0.0, 0.0);
    for i in 0..cfg.steps() {
        let s = i as f64 * h;
        // exact drift increment of lambda s - s^2/2 over [s, s + h]
        w += sqrt_h * noise() + lambda * h - s * h - 0.5 * h * h;
        if w <= min {
            if open {
                // the reflected path hits zero inside the step; interpolate
                let frac = prev / (prev + (min - w));
                area += 0.5 * h * frac * prev;
                let length = (i - start) as f64 * h + frac * h;
                if length >= cfg.min_excursion {
                    let mark_count = if area > 0.0 {
                        Poisson::new(area).map_or(0, |d| d.sample(marks) as u64)
                    } else {
                        0
                    };
                    out.push(ExcursionRecord {
                        start: start as f64 * h,
                        length,
                        area,
                        mark_count,
                    });
                }
                open = false;
            }
            min = w;
            prev = 0.0;
        } else {
            let b = w - min;
            if !open {
                open = true;
                start = i;
                area = 0.0;
            }
            area += 0.5 * h * (prev + b);
            prev = b;
        }
    }
    out
}

/// Excursions of path number `replication`.
pub fn sample_excursions(lambda: f64, cfg: &PathConfig, replication: u64) -> Result<Vec<ExcursionRecord>> {
    cfg.validate(lambda)?;
    let mut rng = substream(cfg.seed, replication);
    let mut marks = substream(cfg.seed ^ MARK_KEY, replication);
    Ok(excursions_from_noise(
        lambda,
        cfg,
        || StandardNormal.sample(&mut rng),
        &mut marks,
    ))
}

/// Lengths labelled by mark counts, largest first.
pub fn excursion_point_sample(records: &[ExcursionRecord]) -> PointSample {
    PointSample::labelled(records.iter().map(|r| (r.length, r.mark_count)).collect())
}

/// `paths` independent paths summarized at `eps >= min_excursion`.
pub fn simulate(lambda: f64, cfg: &PathConfig, eps: f64, paths: u64) -> Result<Vec<SimulationRecord>> {
    cfg.validate(lambda)?;
    if !(eps >= cfg.min_excursion) {
        return Err(invalid("eps must be at least min_excursion"));
    }
    (0..paths)
        .into_par_iter()
        .map(|rep| {
            let records = sample_excursions(lambda, cfg, rep)?;
            let all = excursion_point_sample(&records);
            let kept: Vec<(f64, u64)> = all
                .points()
                .iter()
                .zip(all.labels().unwrap_or(&[]))
                .filter(|(x, _)| **x >= eps)
                .map(|(x, l)| (*x, *l))
                .collect();
            let points = PointSample::labelled(kept);
            Ok(SimulationRecord {
                sampler: Sampler::Bm,
                seed: cfg.seed,
                replication: rep,
                n: None,
                lambda,
                eps,
                z_eps: points.weight_at_least(eps),
                chi_eps: points.len() as u64,
                points,
            })
        })
        .collect()
}
