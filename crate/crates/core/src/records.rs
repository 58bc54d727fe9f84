//! Replication-level simulation records, one JSON object per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Graph,
    Bm,
}

impl Sampler {
    pub fn name(self) -> &'static str {
        match self {
            Sampler::Graph => "graph",
            Sampler::Bm => "bm",
        }
    }
}

/// One replication: the points above `eps` with their labels, and the
/// statistics `z_eps` (their total) and `chi_eps` (their number).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub sampler: Sampler,
    pub seed: u64,
    pub replication: u64,
    /// Vertex count for the graph sampler.
    pub n: Option<u64>,
    pub lambda: f64,
    pub eps: f64,
    pub z_eps: f64,
    pub chi_eps: u64,
    pub points: PointSample,
}

pub fn write_json_lines<W: Write>(records: &[SimulationRecord], mut out: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(())
}

/// Reads records, skipping blank lines; any other malformed line is an error.
pub fn read_json_lines<R: BufRead>(input: R) -> Result<Vec<SimulationRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        out.push(r);
    }
    Ok(out)
}
