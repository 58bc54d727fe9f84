//! One function per subcommand, each producing a table or simulation records.

use std::f64::consts::PI;

use critwin::bm_sim::{self, default_horizon, PathConfig};
use critwin::branching::{borel_pmf, progeny_tail_scaled, survival_probability, u_eps};
use critwin::extremes::{kth_largest_density, largest_cdf};
use critwin::graph_sim::{self, WindowConfig};
use critwin::intensity::{intensity_label, intensity_total, label_distribution, IntensityParams};
use critwin::moments::{
    count_variance, cubic_identity_residual, expected_count, expected_weight, factorial_moments, unicyclic_weight,
    weight_identity_residual, weight_variance,
};
use critwin::records::SimulationRecord;
use critwin::stats::{mean_se, mean_var, variance_se};
use critwin::{Error, Result};

use crate::manifest::{Command, ExperimentManifest, SamplerArg};
use crate::output::{Cell, Table};

pub enum Output {
    Table(Table),
    Records(Vec<SimulationRecord>),
}

pub fn execute(m: &ExperimentManifest) -> Result<Output> {
    let o = &m.options;
    if !(o.abs_tol > 0.0 && o.rel_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let table = match m.command {
        Command::Intensity => intensity(m)?,
        Command::WeightMoments => weight_moments(m)?,
        Command::CountMoments => count_moments(m)?,
        Command::FactorialMoments => factorial(m)?,
        Command::LargestCdf => largest(m)?,
        Command::Branching => branching(m)?,
        Command::Identities => identities(m)?,
        Command::Compare => compare(m)?,
        Command::SimulateGraph => return Ok(Output::Records(graph_sim::simulate(&window(m), o.eps)?)),
        Command::SimulateBm => return Ok(Output::Records(bm_simulate(m)?)),
    };
    Ok(Output::Table(table))
}

fn params(m: &ExperimentManifest) -> IntensityParams {
    IntensityParams::new(m.options.lambda)
}

fn grid(m: &ExperimentManifest) -> Result<Vec<f64>> {
    let o = &m.options;
    if !(o.x_min > 0.0 && o.x_max > o.x_min) || o.points < 2 {
        return Err(Error::InvalidArgument(
            "grid needs 0 < x-min < x-max and at least 2 points".into(),
        ));
    }
    let h = (o.x_max - o.x_min) / (o.points - 1) as f64;
    Ok((0..o.points).map(|i| o.x_min + i as f64 * h).collect())
}

fn intensity(m: &ExperimentManifest) -> Result<Table> {
    let p = params(m);
    let labels = m.options.order;
    let mut cols = vec!["x".to_string(), "intensity".to_string()];
    cols.extend((0..labels).map(|l| format!("intensity_{l}")));
    cols.extend((0..labels).map(|l| format!("p_{l}")));
    let mut t = Table {
        columns: cols,
        rows: Vec::new(),
    };
    for x in grid(m)? {
        let mut row = vec![Cell::from(x), intensity_total(x, &p)?.into()];
        for l in 0..labels {
            row.push(intensity_label(x, l, &p)?.into());
        }
        let law = label_distribution(x, &p)?;
        row.extend((0..labels).map(|l| Cell::from(law.masses.get(l).copied().unwrap_or(0.0))));
        t.push(row);
    }
    Ok(t)
}

fn moment_table(rows: [(&str, f64, f64, f64); 2]) -> Table {
    let mut t = Table::new(&["quantity", "exact", "err_bound", "asymptotic", "delta"]);
    for (name, exact, err, asym) in rows {
        t.push(vec![
            name.into(),
            exact.into(),
            err.into(),
            asym.into(),
            (exact - asym).into(),
        ]);
    }
    t
}

fn weight_moments(m: &ExperimentManifest) -> Result<Table> {
    let (eps, lambda, spec, p) = (m.options.eps, m.options.lambda, m.spec(), params(m));
    let mean = expected_weight(eps, &p, &spec)?;
    let var = weight_variance(eps, &p, &spec)?;
    let root = (2.0 / PI).sqrt();
    let mean_asym = root / eps.sqrt() + lambda + lambda * lambda * eps.sqrt() / (2.0 * PI).sqrt();
    Ok(moment_table([
        ("mean", mean.value, mean.err_bound, mean_asym),
        ("variance", var.value, var.err_bound, root * eps.sqrt()),
    ]))
}

fn count_moments(m: &ExperimentManifest) -> Result<Table> {
    let (eps, lambda, spec, p) = (m.options.eps, m.options.lambda, m.spec(), params(m));
    let mean = expected_count(eps, &p, &spec)?;
    let var = count_variance(eps, &p, &spec)?;
    let lead = (2.0 / (9.0 * PI)).sqrt() * eps.powf(-1.5);
    let mean_asym = lead - lambda * lambda / (2.0 * PI * eps).sqrt() + 0.25 * (1.0 / eps).ln();
    Ok(moment_table([
        ("mean", mean.value, mean.err_bound, mean_asym),
        ("variance", var.value, var.err_bound, lead),
    ]))
}

fn factorial(m: &ExperimentManifest) -> Result<Table> {
    let table = factorial_moments(&params(m), m.options.eps, m.options.order, &m.spec())?;
    let mut t = Table::new(&["k", "value", "err_bound"]);
    for (k, (v, e)) in table.values.iter().zip(&table.certified_abs_err).enumerate() {
        t.push(vec![k.into(), (*v).into(), (*e).into()]);
    }
    Ok(t)
}

fn largest(m: &ExperimentManifest) -> Result<Table> {
    let (p, spec) = (params(m), m.spec());
    let mut t = Table::new(&["x", "cdf", "cdf_lower", "cdf_upper", "density_1", "density_2"]);
    for x in grid(m)? {
        let c = largest_cdf(x, &p, &spec)?;
        let h1 = kth_largest_density(x, 1, &p, &spec)?;
        let h2 = kth_largest_density(x, 2, &p, &spec)?;
        t.push(vec![
            x.into(),
            c.value.into(),
            c.lower.into(),
            c.upper.into(),
            h1.value.into(),
            h2.value.into(),
        ]);
    }
    Ok(t)
}

fn branching(m: &ExperimentManifest) -> Result<Table> {
    let o = &m.options;
    let u = u_eps(o.lambda, o.eps, &m.spec())?;
    let tail = progeny_tail_scaled(o.lambda, o.eps, o.n)?;
    let mean = 1.0 + o.lambda / (o.n as f64).cbrt();
    let mut t = Table::new(&["quantity", "k", "value"]);
    t.push(vec!["u_eps".into(), 0usize.into(), u.value().into()]);
    t.push(vec!["u_eps_tail_form".into(), 0usize.into(), u.tail_form.value.into()]);
    t.push(vec![
        "u_eps_smooth_form".into(),
        0usize.into(),
        u.smooth_form.value.into(),
    ]);
    t.push(vec!["progeny_tail_scaled".into(), 0usize.into(), tail.value.into()]);
    t.push(vec![
        "survival_probability".into(),
        0usize.into(),
        survival_probability(mean).into(),
    ]);
    for k in 1..=o.points as u64 {
        t.push(vec!["borel_pmf".into(), k.into(), borel_pmf(k, mean).into()]);
    }
    Ok(t)
}

fn identities(m: &ExperimentManifest) -> Result<Table> {
    let (p, spec, o) = (params(m), m.spec(), &m.options);
    let mut t = Table::new(&["identity", "lambda", "residual", "err_bound"]);
    let weight = weight_identity_residual(&p, &spec)?;
    t.push(vec![
        "weight".into(),
        o.lambda.into(),
        weight.value.into(),
        weight.err_bound.into(),
    ]);
    let cubic = cubic_identity_residual(&p, &spec)?;
    t.push(vec![
        "cubic".into(),
        o.lambda.into(),
        cubic.value.into(),
        cubic.err_bound.into(),
    ]);
    let w = unicyclic_weight(&p, &spec)?;
    t.push(vec![
        "unicyclic".into(),
        o.lambda.into(),
        (w.label_side.value - w.drift_side.value).into(),
        (w.label_side.err_bound + w.drift_side.err_bound).into(),
    ]);
    let u = u_eps(o.lambda, o.eps, &spec)?;
    t.push(vec![
        "u_eps_forms".into(),
        o.lambda.into(),
        (u.tail_form.value - u.smooth_form.value).into(),
        (u.tail_form.err_bound + u.smooth_form.err_bound).into(),
    ]);
    Ok(t)
}

fn window(m: &ExperimentManifest) -> WindowConfig {
    WindowConfig {
        n: m.options.n,
        lambda: m.options.lambda,
        seed: m.options.seed,
        replications: m.options.replications,
    }
}

pub fn path_config(m: &ExperimentManifest) -> PathConfig {
    let o = &m.options;
    PathConfig {
        step: o.step.unwrap_or(o.min_excursion / 1000.0),
        horizon: o.horizon.unwrap_or_else(|| default_horizon(o.lambda)),
        seed: o.seed,
        min_excursion: o.min_excursion,
    }
}

fn bm_simulate(m: &ExperimentManifest) -> Result<Vec<SimulationRecord>> {
    let o = &m.options;
    bm_sim::simulate(o.lambda, &path_config(m), o.eps, o.replications)
}

/// Empirical moments of `Z_eps` and `chi_eps` against the limit.
fn compare(m: &ExperimentManifest) -> Result<Table> {
    let o = &m.options;
    let records = match o.sampler {
        SamplerArg::Graph => graph_sim::simulate(&window(m), o.eps)?,
        SamplerArg::Bm => bm_simulate(m)?,
    };
    if records.len() < 2 {
        return Err(Error::InsufficientSamples {
            observed: records.len(),
            required: 2,
        });
    }
    let (p, spec) = (params(m), m.spec());
    let z: Vec<f64> = records.iter().map(|r| r.z_eps).collect();
    let chi: Vec<f64> = records.iter().map(|r| r.chi_eps as f64).collect();
    let mut t = Table::new(&[
        "statistic",
        "empirical",
        "std_error",
        "analytic",
        "analytic_err",
        "z_score",
    ]);
    let mut row = |name: &str, emp: f64, se: f64, exact: critwin::quadrature::Integral| {
        t.push(vec![
            name.into(),
            emp.into(),
            se.into(),
            exact.value.into(),
            exact.err_bound.into(),
            ((emp - exact.value) / se).into(),
        ]);
    };
    row(
        "mean_z",
        mean_var(&z).0,
        mean_se(&z),
        expected_weight(o.eps, &p, &spec)?,
    );
    row(
        "var_z",
        mean_var(&z).1,
        variance_se(&z),
        weight_variance(o.eps, &p, &spec)?,
    );
    row(
        "mean_chi",
        mean_var(&chi).0,
        mean_se(&chi),
        expected_count(o.eps, &p, &spec)?,
    );
    row(
        "var_chi",
        mean_var(&chi).1,
        variance_se(&chi),
        count_variance(o.eps, &p, &spec)?,
    );
    Ok(t)
}
