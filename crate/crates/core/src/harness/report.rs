//! Run reports as plot-ready CSV or full JSON.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::run::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format {other:?} (expected csv or json)"))),
        }
    }
}

pub fn write_report(report: &RunReport, path: &Path, format: ReportFormat) -> Result<()> {
    let file = File::create(path)?;
    match format {
        ReportFormat::Json => {
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, report)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        ReportFormat::Csv => write_csv(report, file)?,
    }
    Ok(())
}

/// One row per instance: running accuracy and selected count per filter,
/// then a 0/1 significance flag per filter pair.
pub fn write_csv<W: std::io::Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["instance".to_string()];
    header.extend(report.runs.iter().map(|r| format!("accuracy_{}", r.filter)));
    header.extend(report.runs.iter().map(|r| format!("selected_{}", r.filter)));
    header.extend(report.pairs.iter().map(|p| format!("significant_{}_{}", p.a, p.b)));
    w.write_record(&header)?;
    for k in 0..report.instance_count {
        let mut row = vec![(k + 1).to_string()];
        row.extend(report.runs.iter().map(|r| r.running_accuracy[k].to_string()));
        row.extend(report.runs.iter().map(|r| r.selected_count[k].to_string()));
        row.extend(report.pairs.iter().map(|p| (p.significant[k] as u8).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
