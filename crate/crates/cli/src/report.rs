//! Flat, serializable trial records and sweep summaries, written as JSON or
//! CSV so downstream tooling never has to parse log text.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use hankel_pe::bounds::{BoundReport, Verdict};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRecord {
    pub trial: usize,
    pub name: String,
    pub verdict: String,
    pub margin: f64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub depth: usize,
    pub seed: u64,
    pub elapsed_us: u128,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl ReportRecord {
    pub fn from_bound(
        trial: usize,
        report: &BoundReport,
        dims: (usize, usize, usize),
        depth: usize,
        seed: u64,
        elapsed_us: u128,
    ) -> Self {
        ReportRecord {
            trial,
            name: report.name.clone(),
            verdict: report.verdict.as_str().to_string(),
            margin: report.margin,
            tol: report.tol,
            residual: report.residual,
            n: dims.0,
            m: dims.1,
            p: dims.2,
            depth,
            seed,
            elapsed_us,
            notes: report.notes.clone(),
        }
    }

    pub fn verdict_of(&self) -> Verdict {
        match self.verdict.as_str() {
            "holds" => Verdict::Holds,
            "fails" => Verdict::Fails,
            _ => Verdict::Inapplicable,
        }
    }
}

/// Aggregate verdict counts for a sweep.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct Summary {
    pub trials: usize,
    pub records: usize,
    pub holds: usize,
    pub fails: usize,
    pub inapplicable: usize,
}

impl Summary {
    pub fn tally(trials: usize, records: &[ReportRecord]) -> Self {
        let mut s = Summary {
            trials,
            records: records.len(),
            ..Summary::default()
        };
        for r in records {
            match r.verdict_of() {
                Verdict::Holds => s.holds += 1,
                Verdict::Fails => s.fails += 1,
                Verdict::Inapplicable => s.inapplicable += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => anyhow::bail!("unknown format {other:?}; expected json or csv"),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

pub fn write_records(path: &Path, records: &[ReportRecord], format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Json => {
            fs::write(path, serde_json::to_string_pretty(records)?)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_path(path)
                .with_context(|| format!("writing {}", path.display()))?;
            writer.write_record([
                "trial", "name", "verdict", "margin", "tol", "residual", "n", "m", "p", "depth",
                "seed", "elapsed_us", "notes",
            ])?;
            for r in records {
                writer.write_record([
                    r.trial.to_string(),
                    r.name.clone(),
                    r.verdict.clone(),
                    r.margin.to_string(),
                    r.tol.to_string(),
                    r.residual.map(|v| v.to_string()).unwrap_or_default(),
                    r.n.to_string(),
                    r.m.to_string(),
                    r.p.to_string(),
                    r.depth.to_string(),
                    r.seed.to_string(),
                    r.elapsed_us.to_string(),
                    r.notes.join("; "),
                ])?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

pub fn write_summary(path: &Path, summary: &Summary, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Json => {
            fs::write(path, serde_json::to_string_pretty(summary)?)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_path(path)
                .with_context(|| format!("writing {}", path.display()))?;
            writer.write_record(["trials", "records", "holds", "fails", "inapplicable"])?;
            writer.write_record([
                summary.trials.to_string(),
                summary.records.to_string(),
                summary.holds.to_string(),
                summary.fails.to_string(),
                summary.inapplicable.to_string(),
            ])?;
            writer.flush()?;
        }
    }
    Ok(())
}
