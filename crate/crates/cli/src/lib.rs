//! Command-line front end: analytic tables, simulations and comparisons.
//!
//! Every output starts with the manifest that produced it, so `rerun` on
//! an output file reproduces it byte for byte.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use critwin::records::write_json_lines;
use critwin::Error;

pub mod commands;
pub mod manifest;
pub mod output;

use commands::{execute, Output};
use manifest::{Command, ExperimentManifest, Format, Options};
use output::manifest_line;

#[derive(Debug, Parser)]
#[command(name = "critwin", version, about = "Critical-window random graph toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Tabulate the point intensity, its label parts and the label law.
    Intensity(Options),
    /// Mean and variance of the weight above eps, with their asymptotics.
    WeightMoments(Options),
    /// Mean and variance of the count above eps, with their asymptotics.
    CountMoments(Options),
    /// Factorial moments of the count above eps.
    FactorialMoments(Options),
    /// Distribution of the largest point and densities of the top two.
    LargestCdf(Options),
    /// Branching-process quantities and the Borel law.
    Branching(Options),
    /// Sample G(n, p) in the critical window; JSON writes full records.
    SimulateGraph(Options),
    /// Sample excursions of the reflected drifted Brownian motion.
    SimulateBm(Options),
    /// Simulate and compare moments with the limit, as z-scores.
    Compare(Options),
    /// Residuals of the integral identities.
    Identities(Options),
    /// Re-execute the manifest embedded in an output file.
    Rerun {
        file: PathBuf,
        /// Where to write; defaults to the manifest's own output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

impl Sub {
    fn into_manifest(self) -> Result<(ExperimentManifest, Option<PathBuf>), Error> {
        let (command, options) = match self {
            Sub::Intensity(o) => (Command::Intensity, o),
            Sub::WeightMoments(o) => (Command::WeightMoments, o),
            Sub::CountMoments(o) => (Command::CountMoments, o),
            Sub::FactorialMoments(o) => (Command::FactorialMoments, o),
            Sub::LargestCdf(o) => (Command::LargestCdf, o),
            Sub::Branching(o) => (Command::Branching, o),
            Sub::SimulateGraph(o) => (Command::SimulateGraph, o),
            Sub::SimulateBm(o) => (Command::SimulateBm, o),
            Sub::Compare(o) => (Command::Compare, o),
            Sub::Identities(o) => (Command::Identities, o),
            Sub::Rerun { file, output } => {
                let text = std::fs::read_to_string(&file).map_err(|e| io_error(&file, e))?;
                return Ok((ExperimentManifest::from_output(&text)?, output));
            }
        };
        Ok((ExperimentManifest { command, options }, None))
    }
}

fn io_error(path: &Path, e: io::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// `{"error": {"kind", "message", "best_bound"}}`
pub fn error_record(e: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": e.kind(),
            "message": e.to_string(),
            "best_bound": e.best_bound(),
        }
    })
    .to_string()
}

fn configure_threads() {
    if let Some(n) = std::env::var("CW_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn write_output(m: &ExperimentManifest, out: Output, sink: impl Write) -> io::Result<()> {
    let mut sink = BufWriter::new(sink);
    match out {
        Output::Table(t) => t.write(m, &mut sink)?,
        Output::Records(records) => match m.options.format {
            Format::Json => {
                writeln!(sink, "{}", manifest_line(m))?;
                write_json_lines(&records, &mut sink).map_err(io::Error::other)?;
            }
            Format::Csv => {
                let mut t = output::Table::new(&["replication", "z_eps", "chi_eps", "largest"]);
                for r in &records {
                    let largest = r.points.kth_largest(1).unwrap_or(0.0);
                    t.push(vec![
                        r.replication.into(),
                        r.z_eps.into(),
                        r.chi_eps.into(),
                        largest.into(),
                    ]);
                }
                t.write(m, &mut sink)?;
            }
        },
    }
    sink.flush()
}

/// Run one invocation; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = Error::InvalidArgument(e.to_string().trim().to_string());
            eprintln!("{}", error_record(&err));
            return 2;
        }
    };
    configure_threads();
    match run_manifest(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            1
        }
    }
}

fn run_manifest(sub: Sub) -> Result<(), Error> {
    let (m, target) = sub.into_manifest()?;
    let out = execute(&m)?;
    match target.or_else(|| m.options.output.clone()) {
        Some(path) => {
            let f = File::create(&path).map_err(|e| io_error(&path, e))?;
            write_output(&m, out, f).map_err(|e| io_error(&path, e))
        }
        None => write_output(&m, out, io::stdout().lock()).map_err(|e| Error::Format(e.to_string())),
    }
}
