//! Report emission: a summary JSON, a data CSV and a manifest with digests.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const ARTIFACT_VERSION: &str = concat!("postconc-cli ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_field(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_float(*v),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n', '\r']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(csv_field).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

/// Everything a subcommand produced, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub master_seed: u64,
    pub summary: Value,
    pub table: Table,
    /// Human-readable descriptions of failed assertions.
    pub failures: Vec<String>,
    /// Additional payload files, relative to the output directory.
    pub extra_files: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn summary_document(&self) -> Value {
        let mut doc = serde_json::Map::new();
        doc.insert("command".into(), Value::from(self.command));
        doc.insert("master_seed".into(), Value::from(self.master_seed));
        doc.insert("passed".into(), Value::from(self.passed()));
        doc.insert("failures".into(), Value::from(self.failures.clone()));
        doc.insert("results".into(), self.summary.clone());
        Value::Object(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub master_seed: u64,
    pub artifact_version: String,
    pub outputs: Vec<OutputEntry>,
    pub passed: bool,
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Seconds since the epoch; not covered by any digest.
    pub created_unix: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Serializes with sorted keys and a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let value = serde_json::to_value(value)?;
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug)]
pub struct EmitError {
    pub manifest: RunManifest,
    pub source: io::Error,
}

impl std::fmt::Display for EmitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "writing report failed: {}", self.source)
    }
}

impl std::error::Error for EmitError {}

fn write_file(dir: &Path, rel: &str, bytes: &[u8]) -> io::Result<OutputEntry> {
    let path: PathBuf = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes)?;
    Ok(OutputEntry {
        path: rel.to_owned(),
        sha256: sha256_hex(bytes),
    })
}

/// Writes `<command>-summary.json` and/or `<command>-data.csv`, any extra
/// files, and finally `manifest.json`. On an I/O failure the manifest is
/// still attempted, marked partial.
pub fn emit_report(report: &Report, format: Format, out_dir: &Path) -> Result<RunManifest, EmitError> {
    let mut manifest = RunManifest {
        command: report.command.to_owned(),
        config: report.config.clone(),
        master_seed: report.master_seed,
        artifact_version: ARTIFACT_VERSION.to_owned(),
        outputs: Vec::new(),
        passed: report.passed(),
        partial: false,
        note: None,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let result = (|| -> io::Result<()> {
        fs::create_dir_all(out_dir)?;
        if format.json() {
            let bytes = to_json_bytes(&report.summary_document()).map_err(io::Error::other)?;
            let name = format!("{}-summary.json", report.command);
            manifest.outputs.push(write_file(out_dir, &name, &bytes)?);
        }
        if format.csv() {
            let name = format!("{}-data.csv", report.command);
            manifest.outputs.push(write_file(out_dir, &name, report.table.to_csv().as_bytes())?);
        }
        for (rel, bytes) in &report.extra_files {
            manifest.outputs.push(write_file(out_dir, rel, bytes)?);
        }
        Ok(())
    })();
    if let Err(source) = result {
        manifest.partial = true;
        manifest.note = Some(format!(
            "output incomplete after {} file(s): {source}",
            manifest.outputs.len()
        ));
        if let Ok(bytes) = to_json_bytes(&manifest) {
            let _ = fs::write(out_dir.join(MANIFEST_FILE), bytes);
        }
        return Err(EmitError { manifest, source });
    }
    let bytes = to_json_bytes(&manifest).map_err(|e| EmitError {
        manifest: manifest.clone(),
        source: io::Error::other(e),
    })?;
    if let Err(source) = fs::write(out_dir.join(MANIFEST_FILE), bytes) {
        manifest.partial = true;
        return Err(EmitError { manifest, source });
    }
    Ok(manifest)
}
