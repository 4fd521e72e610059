//! Run records, the JSON manifest and the plain-text summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const DIAGNOSTIC_FILE: &str = "diagnostic.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

fn fmt_limit(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// A built-in pass/fail check: `value` compared against `limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit: format!("<= {}", fmt_limit(limit)), passed: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit: format!(">= {}", fmt_limit(limit)), passed: value >= limit }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, limit: format!("in [{}, {}]", fmt_limit(lo), fmt_limit(hi)), passed: value >= lo && value <= hi }
    }

    /// A boolean property; `value` is 1 when it holds.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, limit: "== 1".into(), passed: ok }
    }
}

/// A CSV artifact produced by an experiment, written by the collector.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

/// What one sweep element (or the sweep aggregate) produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.push(Metric { name: name.into(), value });
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn artifact(&mut self, file: &str, contents: String) {
        self.artifacts.push(Artifact { file: file.into(), contents });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub label: String,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    pub experiment: String,
    pub config_hash: String,
    pub config: String,
    pub verify_only: bool,
    pub wall_clock_seconds: f64,
    pub elements: Vec<ElementRecord>,
    pub passed: bool,
}

impl RunRecord {
    pub fn checks(&self) -> impl Iterator<Item = (&str, &Check)> {
        self.elements.iter().flat_map(|e| e.checks.iter().map(move |c| (e.label.as_str(), c)))
    }

    pub fn failed_checks(&self) -> Vec<(&str, &Check)> {
        self.checks().filter(|(_, c)| !c.passed).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record fields serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("manifest: {e}")))
    }

    /// Aligned table of every metric and check; no timing information.
    pub fn summary_table(&self) -> String {
        let mut rows: Vec<[String; 4]> = vec![["element".into(), "quantity".into(), "value".into(), "status".into()]];
        for e in &self.elements {
            for m in &e.metrics {
                rows.push([e.label.clone(), m.name.clone(), format!("{:.6e}", m.value), String::new()]);
            }
            for c in &e.checks {
                let status = format!("{} ({})", if c.passed { "PASS" } else { "FAIL" }, c.limit);
                rows.push([e.label.clone(), c.name.clone(), format!("{:.6e}", c.value), status]);
            }
        }
        let mut width = [0usize; 4];
        for r in &rows {
            for (w, cell) in width.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let mut s = format!("experiment {}  config {}\n", self.experiment, &self.config_hash[..12]);
        for r in &rows {
            let line = format!("{:<w0$}  {:<w1$}  {:>w2$}  {}", r[0], r[1], r[2], r[3], w0 = width[0], w1 = width[1], w2 = width[2]);
            s.push_str(line.trim_end());
            s.push('\n');
        }
        s.push_str(if self.passed { "result PASS\n" } else { "result FAIL\n" });
        s
    }
}

fn write(dir: &Path, file: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(file);
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes the artifacts, the manifest and the summary table into `dir`.
pub fn emit_outputs(record: &RunRecord, artifacts: &[Artifact], dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::with_capacity(artifacts.len() + 2);
    for a in artifacts {
        written.push(write(dir, &a.file, &a.contents)?);
    }
    written.push(write(dir, MANIFEST_FILE, &record.to_json())?);
    written.push(write(dir, SUMMARY_FILE, &record.summary_table())?);
    Ok(written)
}

/// Records an error for a failed run.
pub fn write_diagnostic(dir: &Path, experiment: &str, err: &CliError) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    write(dir, DIAGNOSTIC_FILE, &format!("experiment {experiment}\nexit {}\nerror {err}\n", err.exit_code()))
}
