//! Tabular output. CSV files start with `#` lines echoing the configuration;
//! JSON documents carry the same echo plus a schema version.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A numeric table; `None` cells are written empty (CSV) or `null` (JSON).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest text that parses back to the same `f64`; integral values print
/// without a fraction.
pub fn fmt_f64(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:?}")
    }
}

/// Everything that goes into one output file besides the table itself.
pub struct Header<'a> {
    pub command: &'a str,
    pub echo: Vec<(String, String)>,
    /// Extra `key=value` lines, e.g. derived constants.
    pub notes: Vec<(String, String)>,
}

pub fn write_table(cfg: &RunConfig, header: &Header<'_>, table: &Table) -> Result<(), CliError> {
    let bytes = match cfg.format {
        Format::Csv => csv_bytes(header, table)?,
        Format::Json => json_bytes(header, table)?,
    };
    emit(cfg.out.as_deref(), &bytes)
}

pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
            let mut w = BufWriter::new(f);
            w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| CliError::Io(path.display().to_string(), e))
        }
        None => io::stdout().lock().write_all(bytes).map_err(|e| CliError::Io("stdout".into(), e)),
    }
}

fn csv_bytes(header: &Header<'_>, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    writeln!(buf, "# cbsfs {} {}", env!("CARGO_PKG_VERSION"), header.command).expect("write to Vec");
    for (k, v) in header.echo.iter().chain(&header.notes) {
        writeln!(buf, "# {k}={v}").expect("write to Vec");
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.map(fmt_f64).unwrap_or_default()))?;
    }
    w.into_inner().map_err(|e| CliError::Io("csv buffer".into(), e.into_error()))
}

pub fn config_object(header: &Header<'_>) -> Value {
    let mut m = Map::new();
    for (k, v) in &header.echo {
        m.insert(k.clone(), Value::String(v.clone()));
    }
    Value::Object(m)
}

pub fn document(header: &Header<'_>, data_key: &str, data: Value) -> Value {
    let notes: Map<String, Value> = header.notes.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": header.command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_object(header),
    });
    if !notes.is_empty() {
        doc["notes"] = Value::Object(notes);
    }
    doc[data_key] = data;
    doc
}

fn json_bytes(header: &Header<'_>, table: &Table) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let m: Map<String, Value> = table.columns.iter().cloned().zip(row.iter().map(|c| json!(c))).collect();
            Value::Object(m)
        })
        .collect();
    let doc = document(header, "rows", Value::Array(rows));
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}
