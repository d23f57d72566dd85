//! Output envelopes. Every artifact carries the tool version, the resolved
//! run configuration and a SHA-256 of that configuration.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::spec_file::SpecFile;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Env,
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl TableRange {
    /// `start:end:step`, both ends included.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::usage(format!("table range `{s}` is not start:end:step"));
        let [start, end, step] = parts.as_slice() else { return Err(bad()) };
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        let r = Self { start: num(start)?, end: num(end)?, step: num(step)? };
        if !(r.step > 0.0 && r.start >= 0.0 && r.end >= r.start && r.start.is_finite() && r.end.is_finite()) {
            return Err(CliError::usage(format!("table range `{s}` needs 0 <= start <= end and step > 0")));
        }
        Ok(r)
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as u64;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// The resolved run configuration. Worker count and output locations are
/// left out: they never change results.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecFile>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub which: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_source: Option<SeedSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_terms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableRange>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub emit_paths: bool,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Rows for CSV output, with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

/// Shortest round-trip text for a float; empty for NaN.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:?}")
    }
}

pub struct Artifact {
    pub result: serde_json::Value,
    pub table: Table,
}

pub fn render(config: &RunConfig, artifact: &Artifact) -> Result<Vec<u8>, CliError> {
    let hash = config.hash();
    match config.format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = serde_json::json!({
                "tool": "fpt",
                "version": VERSION,
                "config": config,
                "config_hash": hash,
                "result": artifact.result,
            });
            let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = format!("# fpt {VERSION} {} config_hash={hash}\n", config.command).into_bytes();
            write_csv(&mut out, &artifact.table)?;
            Ok(out)
        }
    }
}

pub fn write_csv<W: Write>(w: W, table: &Table) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| CliError::Output(e.to_string());
    wr.write_record(&table.header).map_err(err)?;
    for row in &table.rows {
        wr.write_record(row).map_err(err)?;
    }
    wr.flush().map_err(|e| CliError::Output(e.to_string()))
}

pub fn emit(bytes: &[u8], output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Output(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_ranges_include_both_ends() {
        let r = TableRange::parse("0:30:1").unwrap();
        assert_eq!(r.points().len(), 31);
        assert_eq!(TableRange::parse("0:1:0.1").unwrap().points().len(), 11);
        assert!(TableRange::parse("3:1:1").is_err());
        assert!(TableRange::parse("0:1").is_err());
    }

    #[test]
    fn hash_tracks_every_echoed_field() {
        let a = RunConfig { command: "series".into(), a: vec![0.1], ..Default::default() };
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.a = vec![0.2];
        assert_ne!(a.hash(), b.hash());
    }
}
