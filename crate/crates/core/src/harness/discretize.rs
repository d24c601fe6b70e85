//! Equal-frequency discretization of numeric columns.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::dataset::ClassColumn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretized {
    /// Bin index of every input value.
    pub bins: Vec<usize>,
    /// Upper edges of all bins but the last; a value equal to a cut goes
    /// to the lower bin.
    pub cuts: Vec<f64>,
    pub warning: Option<String>,
}

impl Discretized {
    pub fn bin_count(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn labels(&self) -> Vec<String> {
        self.bins.iter().map(|b| bin_label(*b)).collect()
    }
}

pub fn bin_label(bin: usize) -> String {
    format!("bin_{bin}")
}

/// Linear-interpolation sample quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Splits `values` into `bins` bins with cuts at the `k/bins` quantiles.
///
/// With fewer distinct values than bins, every distinct value gets its own
/// bin instead and a warning is returned alongside.
pub fn discretize_equal_frequency(values: &[f64], bins: usize) -> Result<Discretized> {
    if bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
    }
    if values.is_empty() {
        return Err(Error::Input("cannot discretize an empty column".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite value {v} in column")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let (cuts, warning) = if distinct.len() < bins {
        let cuts = distinct[..distinct.len() - 1].to_vec();
        let warning = format!(
            "{} distinct values for {bins} bins; using one bin per distinct value",
            distinct.len()
        );
        (cuts, Some(warning))
    } else {
        let cuts = (1..bins).map(|k| quantile(&sorted, k as f64 / bins as f64)).collect();
        (cuts, None)
    };
    let bins = values
        .iter()
        .map(|&v| cuts.partition_point(|&c| c < v))
        .collect();
    Ok(Discretized { bins, cuts, warning })
}

/// Discretizes every numeric column of a delimited file with a header.
///
/// A column is numeric when all its cells other than `missing_token` parse
/// as finite numbers; the class column is left alone. Returns the warnings
/// raised, prefixed with the column name.
pub fn discretize_csv<R: Read, W: Write>(
    input: R,
    output: W,
    bins: usize,
    missing_token: &str,
    class_column: &ClassColumn,
) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(Error::Parse { line: 1, message: "empty file".into() });
    }
    let class = match class_column {
        ClassColumn::Last => Some(header.len() - 1),
        ClassColumn::Index(k) => Some(*k).filter(|k| *k < header.len()),
        ClassColumn::Name(n) => header.iter().position(|h| h == n),
    }
    .ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("class column {class_column:?} not found"),
    })?;
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line: rec.position().map_or(0, |p| p.line()),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        rows.push(rec);
    }
    let mut out: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(str::to_string).collect()).collect();
    let mut warnings = Vec::new();
    for (c, name) in header.iter().enumerate() {
        if c == class {
            continue;
        }
        let present: Vec<(usize, f64)> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| &r[c] != missing_token)
            .map(|(k, r)| r[c].parse::<f64>().ok().filter(|v| v.is_finite()).map(|v| (k, v)))
            .collect::<Option<_>>()
            .unwrap_or_default();
        if present.is_empty() {
            continue;
        }
        let values: Vec<f64> = present.iter().map(|p| p.1).collect();
        let d = discretize_equal_frequency(&values, bins)?;
        if let Some(w) = &d.warning {
            warnings.push(format!("{name}: {w}"));
        }
        for ((k, _), label) in present.iter().zip(d.labels()) {
            out[*k][c] = label;
        }
    }
    let mut w = csv::Writer::from_writer(output);
    w.write_record(&header)?;
    for row in out {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(warnings)
}
