//! CSV tables and run manifests.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use serde::Serialize;
use serde_json::Value;
use std::io::Write;
use std::path::{Path, PathBuf};

/// A CSV table; every value is already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

/// Shortest representation that reads back to the same f64, in scientific notation for
/// very small or very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Result of one subcommand.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    /// Derived statistics echoed into the manifest.
    pub summary: Value,
    /// Set when a budget ran out and the table holds partial results.
    pub budget_exhausted: bool,
    /// Set when the run completed but a check it performs failed.
    pub failure: Option<String>,
}

impl Outcome {
    pub fn ok(table: Table, summary: Value) -> Self {
        Outcome { table, summary, budget_exhausted: false, failure: None }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    library_version: &'static str,
    config: &'a ExperimentConfig,
    status: &'a str,
    exit_code: i32,
    outputs: Vec<String>,
    summary: &'a Value,
    wall_time_s: f64,
    timestamp_unix_s: u64,
}

/// Path of the manifest written next to a CSV output.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Writes the CSV (to `config.out`, or to `stdout` when unset) and, with an output path,
/// the manifest next to it.
pub fn emit(config: &ExperimentConfig, outcome: &Outcome, exit_code: i32, wall_time_s: f64, stdout: &mut dyn Write) -> Result<(), CliError> {
    let csv = outcome.table.to_csv()?;
    let Some(out) = &config.out else {
        stdout.write_all(&csv)?;
        return Ok(());
    };
    std::fs::write(out, &csv)?;
    let status = if outcome.budget_exhausted {
        "budget_exhausted"
    } else if outcome.failure.is_some() {
        "failed"
    } else {
        "ok"
    };
    let timestamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let m = Manifest {
        tool: "shearlab",
        version: env!("CARGO_PKG_VERSION"),
        library_version: shearlab::VERSION,
        config,
        status,
        exit_code,
        outputs: vec![out.display().to_string()],
        summary: &outcome.summary,
        wall_time_s,
        timestamp_unix_s: timestamp,
    };
    let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Io(e.into()))?;
    std::fs::write(manifest_path(out), text + "\n")?;
    Ok(())
}
