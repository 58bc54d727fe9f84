use critwin::bm_sim::{excursion_point_sample, excursions_from_noise, simulate, PathConfig};
use critwin::extremes::void_probability;
use critwin::intensity::IntensityParams;
use critwin::moments::expected_count;
use critwin::quadrature::QuadratureSpec;
use critwin::rng::substream;
use critwin::stats::{mean_se, mean_var};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn counts(lambda: f64, cfg: &PathConfig, eps: f64, paths: u64) -> Vec<f64> {
    simulate(lambda, cfg, eps, paths)
        .unwrap()
        .iter()
        .map(|r| r.chi_eps as f64)
        .collect()
}

#[test]
fn mean_count_at_criticality() {
    let cfg = PathConfig::for_lambda(0.0, 3, 0.05);
    let xs = counts(0.0, &cfg, 0.5, 10_000);
    let spec = QuadratureSpec::default();
    let params = IntensityParams::new(0.0);
    let ec = expected_count(0.5, &params, &spec).unwrap().value;
    let (mean, _) = mean_var(&xs);
    assert!((mean - ec).abs() <= 3.0 * mean_se(&xs), "{mean} vs {ec}");

    let void: Vec<f64> = counts(0.0, &cfg, 1.0, 10_000)
        .iter()
        .map(|&n| f64::from(n == 0.0))
        .collect();
    let p0 = void_probability(&params, 1.0, &spec).unwrap().value;
    assert!(
        (mean_var(&void).0 - p0).abs() <= 3.0 * mean_se(&void),
        "{} vs {p0}",
        mean_var(&void).0
    );
}

#[test]
fn many_small_excursions_far_below_the_window() {
    let cfg = PathConfig::for_lambda(-20.0, 8, 0.01);
    let xs = counts(-20.0, &cfg, 0.01, 200);
    let ec = expected_count(0.01, &IntensityParams::new(-20.0), &QuadratureSpec::default())
        .unwrap()
        .value;
    let (mean, _) = mean_var(&xs);
    assert!((mean - ec).abs() <= 3.0 * mean_se(&xs), "{mean} vs {ec}");
}

#[test]
fn halving_the_step_is_within_noise() {
    // the coarse path is driven by the same Brownian increments as the fine one
    let coarse = PathConfig {
        step: 1e-4,
        horizon: 12.0,
        seed: 21,
        min_excursion: 0.05,
    };
    let fine = PathConfig { step: 5e-5, ..coarse };
    let diffs: Vec<(f64, f64)> = (0..2000u64)
        .into_par_iter()
        .map(|rep| {
            let mut marks = substream(0, rep);
            let mut rng = substream(coarse.seed, rep);
            let f = excursions_from_noise(0.0, &fine, || StandardNormal.sample(&mut rng), &mut marks);
            let mut rng = substream(coarse.seed, rep);
            let c = excursions_from_noise(
                0.0,
                &coarse,
                || {
                    let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                    (a + b) / std::f64::consts::SQRT_2
                },
                &mut marks,
            );
            let n = |r: &[_]| excursion_point_sample(r).count_at_least(0.5) as f64;
            (n(&f), n(&c))
        })
        .collect();
    let fine_counts: Vec<f64> = diffs.iter().map(|d| d.0).collect();
    let delta: f64 = diffs.iter().map(|d| d.0 - d.1).sum::<f64>() / diffs.len() as f64;
    assert!(
        delta.abs() <= mean_se(&fine_counts),
        "{delta} vs {}",
        mean_se(&fine_counts)
    );
}
