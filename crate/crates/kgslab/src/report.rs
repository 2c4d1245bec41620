//! Artifact emission: CSV tables, the JSON summary, and the run manifest.
//!
//! CSV bodies are byte-reproducible under a fixed config and seed: floats
//! are written with Rust's shortest round-trip formatting, rows are emitted
//! in deterministic order, and nothing time-dependent goes into them. The
//! manifest (config hash, code version, seed, timestamp) lives in its own
//! file so reproducibility checks can compare the data files bytewise.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write artifact {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Format a float with shortest round-trip representation; NaN and
/// infinities are spelled out so CSV readers see explicit markers.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt_i32(x: Option<i32>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Deterministic CSV table writer.
pub struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row arity mismatch");
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), ReportError> {
        let mut body = String::new();
        body.push_str(&self.header.join(","));
        body.push('\n');
        for row in &self.rows {
            body.push_str(&row.join(","));
            body.push('\n');
        }
        write_atomic(path, body.as_bytes())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let mut f = fs::File::create(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(bytes).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Versioned JSON summary of one experiment run.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: &'static str,
    pub pass: bool,
    pub params: serde_json::Value,
    pub metrics: serde_json::Value,
}

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

impl Summary {
    pub fn write(&self, path: &Path) -> Result<(), ReportError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// Reproducibility manifest; the only artifact carrying a timestamp.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: &'static str,
    pub config_sha256: String,
    pub code_version: &'static str,
    pub seed: Option<u64>,
    pub created_unix: u64,
}

impl Manifest {
    pub fn new(experiment: &'static str, raw_config: &str, seed: Option<u64>) -> Self {
        let mut h = Sha256::new();
        h.update(raw_config.as_bytes());
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            experiment,
            config_sha256: format!("{:x}", h.finalize()),
            code_version: env!("CARGO_PKG_VERSION"),
            seed,
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), ReportError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-17, 123456.789, -0.0] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_bodies_are_stable() {
        let dir = std::env::temp_dir().join("kgslab-report-test");
        let path = dir.join("t.csv");
        let mut t = CsvTable::new(vec!["a", "b"]);
        t.push(vec![fmt_f64(0.5), "x".into()]);
        t.write(&path).unwrap();
        let first = fs::read(&path).unwrap();
        t.write(&path).unwrap();
        let second = fs::read(&path).unwrap();
        assert_eq!(first, second);
        assert_eq!(String::from_utf8(first).unwrap(), "a,b\n0.5,x\n");
        let _ = fs::remove_dir_all(&dir);
    }
}
