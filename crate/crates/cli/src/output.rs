//! results.csv, report.json and plots/*.svg.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::plot::LinePlot;

/// One long-format result line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub n: usize,
    pub t: f64,
    pub quantity: String,
    pub index: i64,
    pub value: f64,
    pub stderr: f64,
}

impl ResultRow {
    pub fn new(n: usize, t: f64, quantity: &str, index: i64, value: f64, stderr: f64) -> Self {
        ResultRow {
            n,
            t,
            quantity: quantity.to_string(),
            index,
            value,
            stderr,
        }
    }
}

/// A named pass/fail gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub observed: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `observed ≤ threshold`.
    pub fn at_most(id: &str, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            id: id.to_string(),
            observed,
            threshold,
            passed: observed <= threshold,
            detail: detail.into(),
        }
    }

    /// Passes when `observed ≥ threshold`.
    pub fn at_least(id: &str, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            id: id.to_string(),
            observed,
            threshold,
            passed: observed >= threshold,
            detail: detail.into(),
        }
    }

    pub fn flag(id: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            id: id.to_string(),
            observed: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed,
            detail: detail.into(),
        }
    }
}

/// Everything a runner produces.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
    pub plots: Vec<(String, LinePlot)>,
    /// Extra CSV files as `(file name, header, records)`.
    pub tables: Vec<(String, Vec<String>, Vec<Vec<String>>)>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    kind: crate::config::Kind,
    seed: u64,
    passed: bool,
    checks: &'a [Check],
    summary: &'a serde_json::Value,
    config: &'a crate::config::ExperimentConfig,
}

pub fn write_all(
    dir: &Path,
    config: &crate::config::ExperimentConfig,
    out: &RunOutput,
    timestamp: Option<&str>,
) -> Result<Vec<PathBuf>> {
    let plots_dir = dir.join("plots");
    fs::create_dir_all(&plots_dir).with_context(|| format!("creating {}", plots_dir.display()))?;
    let mut written = Vec::new();

    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    for r in &out.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    written.push(csv_path);

    for (name, header, records) in &out.tables {
        let p = dir.join(name);
        let mut w = csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(header)?;
        for r in records {
            w.write_record(r)?;
        }
        w.flush()?;
        written.push(p);
    }

    let report = Report {
        schema_version: crate::config::SCHEMA_VERSION,
        kind: config.kind,
        seed: config.seed,
        passed: out.passed(),
        checks: &out.checks,
        summary: &out.summary,
        config,
    };
    let json_path = dir.join("report.json");
    fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n")?;
    written.push(json_path);

    for (name, plot) in &out.plots {
        let p = plots_dir.join(format!("{name}.svg"));
        fs::write(&p, plot.to_svg(timestamp))?;
        written.push(p);
    }
    Ok(written)
}
