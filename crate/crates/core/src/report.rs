//! Tabular output shared by the reports: CSV with `#` metadata lines, and
//! JSON documents shaped `{meta, rows}`.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows as JSON objects keyed by column name.
    pub fn json_rows(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect::<Map<_, _>>()))
            .collect()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// CSV text: one `# key: value` line per meta entry, then header and rows.
pub fn csv_string(meta: &Map<String, Value>, table: &Table) -> Result<String> {
    let mut out = Vec::new();
    for (k, v) in meta {
        writeln!(out, "# {k}: {}", cell(v)).expect("write to memory");
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let io = |e: csv::Error| CoreError::Validation(format!("csv encoding: {e}"));
        w.write_record(&table.columns).map_err(io)?;
        for row in &table.rows {
            w.write_record(row.iter().map(cell)).map_err(io)?;
        }
        w.flush().map_err(|e| CoreError::Validation(format!("csv encoding: {e}")))?;
    }
    Ok(String::from_utf8(out).expect("csv output is utf-8"))
}

/// `{meta, rows}` document, pretty-printed with a trailing newline.
pub fn json_document(meta: &Map<String, Value>, rows: Value) -> String {
    let mut doc = Map::new();
    doc.insert("meta".into(), Value::Object(meta.clone()));
    doc.insert("rows".into(), rows);
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json values serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CoreError::io(path, e))
}

pub fn write_csv(path: &Path, meta: &Map<String, Value>, table: &Table) -> Result<()> {
    write_text(path, &csv_string(meta, table)?)
}

pub fn write_json(path: &Path, meta: &Map<String, Value>, rows: Value) -> Result<()> {
    write_text(path, &json_document(meta, rows))
}
