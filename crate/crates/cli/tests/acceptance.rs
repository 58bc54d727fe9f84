//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use critwin::bm_sim::{self, PathConfig};
use critwin::branching::{borel_pmf, progeny_tail_scaled, survival_probability, u_eps};
use critwin::extremes::{gumbel_cdf, gumbel_params, largest_cdf, normal_approx_params};
use critwin::graph_sim::{self, LabelFrequencies, WindowConfig};
use critwin::intensity::{window_label_law, IntensityParams};
use critwin::moments::{
    count_variance, cubic_identity_residual, expected_count, expected_weight, unicyclic_weight,
    weight_identity_residual, weight_variance,
};
use critwin::quadrature::QuadratureSpec;
use critwin::records::SimulationRecord;
use critwin::stats::{mean_se, mean_var, variance_se, Ecdf};
use critwin::Result;

struct Check {
    name: String,
    ok: bool,
    detail: String,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    /// `|value - target| <= tol`
    fn near(&mut self, name: impl Into<String>, value: Result<f64>, target: f64, tol: f64) {
        match value {
            Ok(v) => self.push(
                name,
                (v - target).abs() <= tol,
                format!("{v:.6e} vs {target:.6e} (tol {tol:.1e})"),
            ),
            Err(e) => self.push(name, false, e.to_string()),
        }
    }

    fn push(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
    }
}

fn p(lambda: f64) -> IntensityParams {
    IntensityParams::new(lambda)
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn identities() -> Checks {
    let mut c = Checks::default();
    for lambda in [-2.0, -1.0, 1.0, 2.0] {
        c.near(
            format!("weight identity at {lambda}"),
            weight_identity_residual(&p(lambda), &spec()).map(|r| r.value),
            0.0,
            1e-6,
        );
    }
    for lambda in [-1.0, 0.0, 1.0] {
        c.near(
            format!("cubic identity at {lambda}"),
            cubic_identity_residual(&p(lambda), &spec()).map(|r| r.value),
            0.0,
            1e-5,
        );
    }
    for lambda in [-5.0, 0.0, 2.0] {
        let d = unicyclic_weight(&p(lambda), &spec()).map(|w| w.label_side.value - w.drift_side.value);
        c.near(format!("unicyclic weight at {lambda}"), d, 0.0, 1e-8);
    }
    for lambda in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        for eps in [0.01, 0.1, 1.0] {
            let d = u_eps(lambda, eps, &spec()).map(|u| u.tail_form.value - u.smooth_form.value);
            c.near(format!("u_eps forms at ({lambda}, {eps})"), d, 0.0, 1e-9);
        }
    }
    c
}

fn weight_asymptotics() -> Checks {
    let mut c = Checks::default();
    let root = (2.0 / PI).sqrt();
    for eps in [1e-2, 1e-3] {
        let ew = expected_weight(eps, &p(0.0), &spec()).map(|r| r.value);
        c.near(format!("mean weight at {eps}"), ew, root / eps.sqrt(), 2.0 * eps.sqrt());
    }
    let v = weight_variance(1e-2, &p(0.0), &spec()).map(|r| r.value);
    c.near("weight variance at 0.01", v, root * 0.1, 0.5e-2);
    let v = weight_variance(1e-3, &p(0.0), &spec()).map(|r| r.value / 1e-3f64.sqrt() / root);
    c.near("weight variance ratio at 0.001", v, 1.0, 0.05);
    let shift = expected_weight(1e-2, &p(1.0), &spec())
        .and_then(|a| Ok(a.value - expected_weight(1e-2, &p(0.0), &spec())?.value));
    c.near(
        "mean weight shift at lambda 1",
        shift,
        1.0 + 0.1 / (2.0 * PI).sqrt(),
        5e-3,
    );
    c
}

fn count_asymptotics() -> Checks {
    let mut c = Checks::default();
    let eps: f64 = 1e-3;
    let m = expected_count(eps, &p(0.0), &spec()).map(|r| r.value * eps.powf(1.5) / (2.0 / (9.0 * PI)).sqrt());
    c.near("scaled mean count at 0.001", m, 1.0, 0.02);
    let ratio = count_variance(1e-2, &p(0.0), &spec())
        .and_then(|v| Ok(v.value / expected_count(1e-2, &p(0.0), &spec())?.value));
    c.near("count variance over mean at 0.01", ratio, 1.0, 0.2);
    c
}

fn sandwich() -> Checks {
    let mut c = Checks::default();
    for lambda in [-1.0, 0.0, 1.0] {
        for eps in [0.1, 0.01] {
            let r = (|| -> Result<(bool, String)> {
                let low = u_eps(lambda - eps, eps, &spec())?;
                let mid = expected_weight(eps, &p(lambda), &spec())?;
                let high = u_eps(lambda, eps, &spec())?;
                let slack = low.smooth_form.err_bound + mid.err_bound + high.smooth_form.err_bound;
                let ok = low.value() <= mid.value + slack && mid.value <= high.value() + slack;
                Ok((
                    ok,
                    format!("{:.9} <= {:.9} <= {:.9}", low.value(), mid.value, high.value()),
                ))
            })();
            match r {
                Ok((ok, d)) => c.push(format!("sandwich at ({lambda}, {eps})"), ok, d),
                Err(e) => c.push(format!("sandwich at ({lambda}, {eps})"), false, e.to_string()),
            }
        }
    }
    c
}

fn extreme_limits() -> Checks {
    let mut c = Checks::default();
    let lambda = -8.0;
    let g = gumbel_params(lambda).unwrap();
    for s in [-1.0, 0.0, 1.0, 2.0] {
        let x = g.threshold(s);
        // all points are positive, so the distribution function vanishes at x <= 0
        let value = if x <= 0.0 {
            Ok(0.0)
        } else {
            largest_cdf(x, &p(lambda), &spec()).map(|r| r.value)
        };
        c.near(
            format!("Gumbel band at s = {s} (x = {x:.4})"),
            value,
            gumbel_cdf(s),
            0.05,
        );
    }
    let lambda = 8.0;
    let (mean, var) = normal_approx_params(lambda).unwrap();
    for (k, phi) in [(-1.0, 0.158655253931457), (0.0, 0.5), (1.0, 0.841344746068543)] {
        let x = mean + k * var.sqrt();
        c.near(
            format!("normal band at c = {k}"),
            largest_cdf(x, &p(lambda), &spec()).map(|r| r.value),
            phi,
            0.05,
        );
    }
    c
}

/// `(x, P(xi_1 <= x))` on `[0.2, 3]`.
fn largest_cdf_table() -> Result<Vec<(f64, f64)>> {
    (0..=56)
        .map(|i| {
            let x = 0.2 + 0.05 * i as f64;
            Ok((x, largest_cdf(x, &p(0.0), &spec())?.value))
        })
        .collect()
}

fn moment_band(c: &mut Checks, name: &str, xs: &[f64], mean: Result<f64>, var: Result<f64>) {
    let (m, v) = mean_var(xs);
    let (se_m, se_v) = (mean_se(xs), variance_se(xs));
    c.near(
        format!("{name} mean (se {se_m:.3e})"),
        mean.map(|a| (m - a) / se_m),
        0.0,
        3.0,
    );
    c.near(
        format!("{name} variance (se {se_v:.3e})"),
        var.map(|a| (v - a) / se_v),
        0.0,
        3.0,
    );
}

fn label_band(c: &mut Checks, name: &str, records: &[SimulationRecord]) {
    let law = window_label_law(0.9, 1.1, &p(0.0), &spec());
    match (LabelFrequencies::from_records(records, 0.9, 1.1), law) {
        (Ok(f), Ok(law)) => {
            for l in 0..3u64 {
                let se = f.frequency_se(l);
                let z = (f.frequency(l) - law[l as usize]) / se;
                c.push(
                    format!("{name} label {l} in [0.9, 1.1]"),
                    z.abs() <= 3.0,
                    format!(
                        "{:.4} vs {:.4}, z = {z:.2}, {} points",
                        f.frequency(l),
                        law[l as usize],
                        f.total
                    ),
                );
            }
        }
        (Err(e), _) | (_, Err(e)) => c.push(format!("{name} labels"), false, e.to_string()),
    }
}

fn cross_sampler() -> Checks {
    let mut c = Checks::default();
    let table = match largest_cdf_table() {
        Ok(t) => t,
        Err(e) => {
            c.push("largest-point table", false, e.to_string());
            return c;
        }
    };

    let cfg = WindowConfig {
        n: 1_000_000,
        lambda: 0.0,
        seed: 2024,
        // a thousand draws put the sampling noise of the KS distance near 0.03 itself
        replications: 4000,
    };
    match graph_sim::simulate(&cfg, 0.1) {
        Ok(graph) => {
            let moments = &graph[..];
            let z: Vec<f64> = moments.iter().map(|r| r.z_eps).collect();
            moment_band(
                &mut c,
                "graph Z_0.1",
                &z,
                expected_weight(0.1, &p(0.0), &spec()).map(|r| r.value),
                weight_variance(0.1, &p(0.0), &spec()).map(|r| r.value),
            );
            let chi: Vec<f64> = moments.iter().map(|r| r.points.count_at_least(0.5) as f64).collect();
            moment_band(
                &mut c,
                "graph chi_0.5",
                &chi,
                expected_count(0.5, &p(0.0), &spec()).map(|r| r.value),
                count_variance(0.5, &p(0.0), &spec()).map(|r| r.value),
            );
            let largest = Ecdf::new(graph.iter().map(|r| r.points.kth_largest(1).unwrap_or(0.0)).collect());
            let ks = largest.ks_on_grid(&table);
            c.push("graph largest vs analytic", ks <= 0.03, format!("KS {ks:.4}"));
            label_band(&mut c, "graph", &graph);

            let path = PathConfig {
                step: 5e-5,
                horizon: 12.0,
                seed: 2024,
                min_excursion: 0.05,
            };
            match bm_sim::simulate(0.0, &path, 0.05, 10_000) {
                Ok(bm) => {
                    let bm_largest = Ecdf::new(bm.iter().map(|r| r.points.kth_largest(1).unwrap_or(0.0)).collect());
                    let ks = bm_largest.ks_on_grid(&table);
                    c.push("bm largest vs analytic", ks <= 0.03, format!("KS {ks:.4}"));
                    let ks = bm_largest.ks_two_sample(&largest, 0.2, 3.0);
                    c.push("bm largest vs graph largest", ks <= 0.03, format!("KS {ks:.4}"));
                    label_band(&mut c, "bm", &bm);
                }
                Err(e) => c.push("bm sampler", false, e.to_string()),
            }
        }
        Err(e) => c.push("graph sampler", false, e.to_string()),
    }
    c
}

fn branching() -> Checks {
    let mut c = Checks::default();
    let k_max = 1_000_000u64;
    let head: f64 = (1..=k_max).rev().map(|k| borel_pmf(k, 1.0)).sum();
    // sum_{k > K} (2 pi)^(-1/2) k^(-3/2) by the midpoint integral
    let tail = 2.0 / (2.0 * PI).sqrt() / (k_max as f64 + 0.5).sqrt();
    c.near("critical Borel mass", Ok(head + tail), 1.0, 1e-8);
    let delta = 1e-4;
    c.near(
        "survival slope",
        Ok(survival_probability(1.0 + delta) / (2.0 * delta)),
        1.0,
        0.01,
    );
    let r = progeny_tail_scaled(0.0, 1.0, 1_000_000).and_then(|t| Ok(t.value / u_eps(0.0, 1.0, &spec())?.value()));
    c.near("scaled progeny tail over u_eps", r, 1.0, 0.05);
    c
}

fn determinism() -> Checks {
    let mut c = Checks::default();
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 5] = [
        &["identities", "--lambda", "-1"],
        &["largest-cdf", "--lambda", "1", "--points", "5", "--x-min", "0.5"],
        &[
            "simulate-graph",
            "--n",
            "100000",
            "--reps",
            "8",
            "--eps",
            "0.2",
            "--format",
            "json",
        ],
        &["simulate-bm", "--reps", "4", "--eps", "0.1", "--step", "2e-4"],
        &[
            "compare",
            "--sampler",
            "bm",
            "--reps",
            "16",
            "--eps",
            "0.3",
            "--step",
            "2e-4",
            "--format",
            "json",
        ],
    ];
    for (i, args) in runs.iter().enumerate() {
        let first = dir.path().join(format!("out{i}"));
        let again = dir.path().join(format!("again{i}"));
        let exe = env!("CARGO_BIN_EXE_critwin");
        let a = Command::new(exe)
            .args(*args)
            .arg("--output")
            .arg(&first)
            .env("CW_THREADS", "1")
            .status();
        let b = Command::new(exe)
            .arg("rerun")
            .arg(&first)
            .arg("--output")
            .arg(&again)
            .env("CW_THREADS", "3")
            .status();
        let same = match (a, b) {
            (Ok(a), Ok(b)) if a.success() && b.success() => {
                let (x, y) = (std::fs::read(&first).unwrap(), std::fs::read(&again).unwrap());
                !x.is_empty() && x == y
            }
            _ => false,
        };
        c.push(format!("rerun of {}", args[0]), same, "byte-identical");
    }
    c
}

fn main() {
    let criteria: [(&str, fn() -> Checks); 8] = [
        ("integral identities", identities),
        ("weight asymptotics", weight_asymptotics),
        ("count asymptotics", count_asymptotics),
        ("weight sandwich", sandwich),
        ("extreme-lambda limits", extreme_limits),
        ("cross-sampler agreement", cross_sampler),
        ("branching suite", branching),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run().0;
        let bad: Vec<&Check> = checks.iter().filter(|c| !c.ok).collect();
        let status = if bad.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {}: {title} ({}/{} checks, {:.1}s)",
            i + 1,
            checks.len() - bad.len(),
            checks.len(),
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            let mark = if c.ok { "ok " } else { "BAD" };
            println!("    {mark} {}: {}", c.name, c.detail);
        }
        failed += usize::from(!bad.is_empty());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
