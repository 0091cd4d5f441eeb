//! CSV and JSON emission. Both carry a metadata block with the tool
//! version and the fully resolved config; a failed run appends a failure
//! record after whatever was computed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{CliError, TOOL, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Missing,
}

impl Cell {
    fn csv(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            // 17 significant digits round-trip every f64.
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Missing => String::new(),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) => json!(x),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

pub fn meta(command: &str, config: &impl Serialize) -> Value {
    json!({ "tool": TOOL, "version": VERSION, "command": command, "config": config })
}

pub fn open(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn failure_record(error: &str, rows: usize) -> Value {
    json!({ "error": error, "rows_written": rows })
}

/// A table of rows with named columns.
pub struct Table {
    command: String,
    config: Value,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    extras: Vec<(String, Value)>,
}

impl Table {
    pub fn new(command: &str, config: &impl Serialize, columns: &[&str]) -> Self {
        Table {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("configs serialize"),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            extras: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Extra metadata, emitted as a `# key: json` line or a top-level key.
    pub fn extra(&mut self, key: &str, value: Value) {
        self.extras.push((key.to_string(), value));
    }

    fn write(&self, format: Format, w: &mut dyn Write, failure: Option<&str>) -> io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(w, "# tool: {TOOL} {VERSION}")?;
                writeln!(w, "# command: {}", self.command)?;
                writeln!(w, "# config: {}", self.config)?;
                for (k, v) in &self.extras {
                    writeln!(w, "# {k}: {v}")?;
                }
                writeln!(w, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(|c| c.csv()).collect();
                    writeln!(w, "{}", cells.join(","))?;
                }
                if let Some(err) = failure {
                    writeln!(w, "# failure: {}", failure_record(err, self.rows.len()))?;
                }
            }
            Format::Json => {
                let mut doc = serde_json::Map::new();
                doc.insert("meta".into(), meta(&self.command, &self.config));
                for (k, v) in &self.extras {
                    doc.insert(k.clone(), v.clone());
                }
                doc.insert("columns".into(), json!(self.columns));
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(|c| c.json()).collect())).collect();
                doc.insert("rows".into(), Value::Array(rows));
                if let Some(err) = failure {
                    doc.insert("failure".into(), failure_record(err, self.rows.len()));
                }
                serde_json::to_writer_pretty(&mut *w, &Value::Object(doc)).map_err(io::Error::other)?;
                writeln!(w)?;
            }
        }
        w.flush()
    }

    /// Writes the table; a `failure` is recorded in the output and returned
    /// as a numerical error.
    pub fn finish(&self, format: Format, out: Option<&Path>, failure: Option<String>) -> Result<(), CliError> {
        let mut w = open(out)?;
        self.write(format, &mut w, failure.as_deref())?;
        failure.map_or(Ok(()), |e| Err(CliError::Numerical(e)))
    }
}

/// Writes a JSON report `{meta, ...body}`; a failure adds a `failure` key.
pub fn finish_json(
    command: &str,
    config: &impl Serialize,
    body: Value,
    out: Option<&Path>,
    failure: Option<String>,
) -> Result<(), CliError> {
    let mut doc = serde_json::Map::new();
    doc.insert("meta".into(), meta(command, config));
    if let Value::Object(map) = body {
        doc.extend(map);
    }
    if let Some(err) = &failure {
        doc.insert("failure".into(), json!({ "error": err }));
    }
    let mut w = open(out)?;
    serde_json::to_writer_pretty(&mut w, &Value::Object(doc)).map_err(io::Error::other)?;
    writeln!(w)?;
    w.flush()?;
    failure.map_or(Ok(()), |e| Err(CliError::Numerical(e)))
}
