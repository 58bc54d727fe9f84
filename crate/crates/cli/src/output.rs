//! Plot-ready tables at 12 significant digits, as CSV or JSON lines.

use std::io::Write;

use serde_json::{Map, Value};

use crate::manifest::{ExperimentManifest, Format, CSV_PREFIX};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// `x` to 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => sig12(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // same rounding as the CSV column
            Cell::Num(x) => sig12(*x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, manifest: &ExperimentManifest, out: W) -> std::io::Result<()> {
        match manifest.options.format {
            Format::Csv => self.write_csv(manifest, out),
            Format::Json => self.write_json(manifest, out),
        }
    }

    fn write_csv<W: Write>(&self, manifest: &ExperimentManifest, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_PREFIX}{}", manifest.to_json())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    fn write_json<W: Write>(&self, manifest: &ExperimentManifest, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", manifest_line(manifest))?;
        for row in &self.rows {
            let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
            writeln!(out, "{}", Value::Object(obj))?;
        }
        Ok(())
    }
}

/// `{"manifest": {...}}`, the first line of every JSON output.
pub fn manifest_line(manifest: &ExperimentManifest) -> String {
    let value = serde_json::to_value(manifest).expect("manifest serializes");
    serde_json::json!({ "manifest": value }).to_string()
}
