//! Output files and their metadata block.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use wrongway_core::report::{self, Table};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const TOOL: &str = "wrongway";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a command needs to stamp and place its files. The timestamp
/// lives only in the `generated_at` field so reruns differ nowhere else.
pub struct Sink {
    pub config: RunConfig,
    pub command: &'static str,
    pub generated_at: String,
    hash: String,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(config: RunConfig, command: &'static str, generated_at: impl Into<String>) -> Result<Self> {
        std::fs::create_dir_all(&config.out_dir).map_err(|e| CliError::io(&config.out_dir, e))?;
        let hash = config.hash();
        Ok(Self { config, command, generated_at: generated_at.into(), hash, written: Vec::new() })
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn meta(&self, extra: &[(&str, Value)]) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), TOOL.into());
        m.insert("version".into(), VERSION.into());
        m.insert("command".into(), self.command.into());
        m.insert("config_hash".into(), self.hash.clone().into());
        m.insert("seed".into(), self.config.seed.into());
        for (k, v) in extra {
            m.insert((*k).into(), v.clone());
        }
        m.insert("config".into(), serde_json::to_value(&self.config).expect("config serializes"));
        m.insert("generated_at".into(), self.generated_at.clone().into());
        m
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.config.out_dir.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn csv(&mut self, name: &str, extra: &[(&str, Value)], table: &Table) -> Result<PathBuf> {
        let meta = self.meta(extra);
        let p = self.path(name);
        report::write_csv(&p, &meta, table)?;
        Ok(p)
    }

    pub fn json(&mut self, name: &str, extra: &[(&str, Value)], rows: Value) -> Result<PathBuf> {
        let meta = self.meta(extra);
        let p = self.path(name);
        report::write_json(&p, &meta, rows)?;
        Ok(p)
    }

    /// Free text preceded by the meta block, each line opened by `prefix`.
    pub fn text(&mut self, name: &str, prefix: &str, extra: &[(&str, Value)], body: &str) -> Result<PathBuf> {
        let mut out = String::new();
        for (k, v) in self.meta(extra) {
            let v = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("{prefix} {k}: {v}\n"));
        }
        out.push_str(body);
        let p = self.path(name);
        report::write_text(&p, &out)?;
        Ok(p)
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}

/// `# key: value` lines at the top of a CSV written by [`Sink::csv`].
pub fn read_csv_meta(path: &Path) -> Result<(Map<String, Value>, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut meta = Map::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once(": ") {
                let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
                meta.insert(k.to_string(), value);
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    Ok((meta, body))
}
