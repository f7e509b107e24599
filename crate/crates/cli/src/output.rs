//! Buffered CSV tables and the run manifest they all reference.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use nanoqubit::Config;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Long-form table held in memory until the manifest hash is known.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip text of a float, stable across runs.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub code_version: &'static str,
    pub command: &'a str,
    pub arguments: &'a [String],
    pub timestamp_unix: u64,
    pub threads: usize,
    pub config: &'a Config,
    pub stages: &'a [Stage],
    pub warnings: &'a [String],
    pub files: Vec<&'a str>,
}

/// Everything one subcommand produces.
pub struct Run {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    pub stages: Vec<Stage>,
    /// Lines printed to stdout after the files are written.
    pub summary: Vec<String>,
    /// Set when the command itself failed its contract (selftest failures).
    pub failed: bool,
}

impl Run {
    pub fn new() -> Self {
        Self {
            tables: Vec::new(),
            warnings: Vec::new(),
            stages: Vec::new(),
            summary: Vec::new(),
            failed: false,
        }
    }

    /// Times `f` as a named stage.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(Stage {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn warn_all(&mut self, context: &str, ws: &[String]) {
        for w in ws {
            self.warnings.push(format!("{context}: {w}"));
        }
    }

    pub fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }
}

/// Writes the manifest and every table; returns the manifest path.
pub fn persist(run: &Run, dir: &Path, command: &str, args: &[String], threads: usize, config: &Config) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION"),
        command,
        arguments: args,
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        threads,
        config,
        stages: &run.stages,
        warnings: &run.warnings,
        files: run.tables.iter().map(|t| t.file.as_str()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    let hash = hex::encode(Sha256::digest(json.as_bytes()));
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, &json).with_context(|| format!("cannot write {}", path.display()))?;
    for t in &run.tables {
        let file = dir.join(&t.file);
        let mut out = format!("# manifest {MANIFEST_FILE} sha256={hash}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&t.header)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        std::fs::write(&file, out).with_context(|| format!("cannot write {}", file.display()))?;
    }
    Ok(path)
}
