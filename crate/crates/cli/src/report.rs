//! Quartile tables over per-instance mean normalized regret.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::experiment::{RecordRow, TTestRow, RECORDS, SUMMARY, TTESTS};

pub const REPORT: &str = "report.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub set: String,
    pub penalty: String,
    pub method: String,
    pub instances: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub ttests: Vec<TTestRow>,
}

/// Quantile of sorted data with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("malformed {}", path.display()))
}

/// Build the report from a results directory.
pub fn report(dir: &Path) -> Result<Report> {
    let missing: Vec<&str> = [RECORDS, SUMMARY, TTESTS]
        .into_iter()
        .filter(|f| !dir.join(f).is_file())
        .collect();
    if !missing.is_empty() {
        bail!("missing in {}: {}", dir.display(), missing.join(", "));
    }
    let records: Vec<RecordRow> = read_csv(&dir.join(RECORDS))?;
    let ttests: Vec<TTestRow> = read_csv(&dir.join(TTESTS))?;

    // (set, penalty, method) -> instance -> normalized regrets
    let mut groups: BTreeMap<(String, String, String), BTreeMap<String, Vec<f64>>> =
        BTreeMap::new();
    for r in records {
        groups
            .entry((r.set, r.penalty, r.method))
            .or_default()
            .entry(r.instance)
            .or_default()
            .push(r.normalized_pregret);
    }
    let rows = groups
        .into_iter()
        .map(|((set, penalty, method), per_instance)| {
            let mut means: Vec<f64> = per_instance
                .values()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
                .collect();
            means.sort_by(f64::total_cmp);
            ReportRow {
                set,
                penalty,
                method,
                instances: means.len(),
                min: means[0],
                q1: quantile(&means, 0.25),
                median: quantile(&means, 0.5),
                q3: quantile(&means, 0.75),
                max: means[means.len() - 1],
                mean: means.iter().sum::<f64>() / means.len() as f64,
            }
        })
        .collect();
    Ok(Report { rows, ttests })
}

impl Report {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:<8} {:<14} {:>4} {:>10} {:>10} {:>10} {:>10}",
            "set", "penalty", "method", "n", "q1", "median", "q3", "mean"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:<8} {:<14} {:>4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                r.set, r.penalty, r.method, r.instances, r.q1, r.median, r.q3, r.mean
            );
        }
        if !self.ttests.is_empty() {
            s.push('\n');
            for t in &self.ttests {
                let p = match t.p {
                    Some(p) => format!("p = {p:.4}{}", if t.significant { " *" } else { "" }),
                    None => "degenerate".to_string(),
                };
                let _ = writeln!(s, "{} vs {} (n = {}): {p}", t.method_a, t.method_b, t.n);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_quartiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&[7.0], 0.25), 7.0);
    }
}
