//! The full description of one run; every output file embeds it.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use critwin::quadrature::QuadratureSpec;
use critwin::records::Sampler;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Intensity,
    WeightMoments,
    CountMoments,
    FactorialMoments,
    LargestCdf,
    Branching,
    SimulateGraph,
    SimulateBm,
    Compare,
    Identities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerArg {
    Graph,
    Bm,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Graph => Sampler::Graph,
            SamplerArg::Bm => Sampler::Bm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct Options {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Vertex count for the graph sampler.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    /// Graph replications or Brownian paths.
    #[arg(long = "reps", default_value_t = 200)]
    pub replications: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    /// Grid for tabulating commands.
    #[arg(long, default_value_t = 0.1)]
    pub x_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 30)]
    pub points: usize,
    /// Factorial-moment order or number of labels shown.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = SamplerArg::Graph)]
    pub sampler: SamplerArg,
    /// Euler step; defaults to `min_excursion / 1000`.
    #[arg(long)]
    pub step: Option<f64>,
    /// Path horizon; defaults to the usual lambda-dependent choice.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub min_excursion: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub command: Command,
    #[serde(flatten)]
    pub options: Options,
}

pub const CSV_PREFIX: &str = "# manifest: ";

impl ExperimentManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    pub fn spec(&self) -> QuadratureSpec {
        QuadratureSpec::with_tolerances(self.options.abs_tol, self.options.rel_tol)
    }

    /// The manifest at the head of a file written by this tool.
    pub fn from_output(text: &str) -> critwin::Result<Self> {
        let first = text.lines().next().unwrap_or("");
        let parsed = match first.strip_prefix(CSV_PREFIX) {
            Some(json) => serde_json::from_str(json),
            None => serde_json::from_str::<serde_json::Value>(first).and_then(|mut v| {
                serde_json::from_value(v.get_mut("manifest").map(serde_json::Value::take).unwrap_or_default())
            }),
        };
        parsed.map_err(|e| critwin::Error::Format(format!("no manifest at the head of the file: {e}")))
    }
}
