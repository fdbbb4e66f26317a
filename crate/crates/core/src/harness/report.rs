use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ablation::AblationRow;
use super::protocol::ExperimentResult;
use crate::{Error, Result};

/// Mean and sample standard deviation (n − 1 denominator; 0 for a single value).
pub fn mean_std(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.2} ± {std:.2}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: String,
    pub version: String,
    pub direction: String,
    pub runs: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
}

/// One row per (config, version, direction), pooling every split and fold.
pub fn summarize(results: &[ExperimentResult]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str, &str), Vec<&ExperimentResult>> = BTreeMap::new();
    for r in results {
        groups.entry((&r.config, &r.version, &r.direction)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((config, version, direction), rs)| {
            let (accuracy_mean, accuracy_std) = mean_std(rs.iter().map(|r| r.accuracy));
            let (f1_mean, f1_std) = mean_std(rs.iter().map(|r| r.f1));
            SummaryRow {
                config: config.to_string(),
                version: version.to_string(),
                direction: direction.to_string(),
                runs: rs.len(),
                accuracy_mean,
                accuracy_std,
                f1_mean,
                f1_std,
            }
        })
        .collect()
}

pub fn write_results_csv<W: Write>(out: W, results: &[ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r).map_err(|e| Error::Serialization(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ExperimentResult>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Parse { line: i + 2, message: e.to_string() }))
        .collect()
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.config.clone(),
                r.version.clone(),
                r.direction.clone(),
                r.runs.to_string(),
                format_mean_std(r.accuracy_mean, r.accuracy_std),
                format_mean_std(r.f1_mean, r.f1_std),
            ]
        })
        .collect();
    let mut out = aligned(&["config", "version", "direction", "runs", "accuracy", "f1"], &body);
    out.push_str("\nmean ± sample standard deviation over all split/fold runs\n");
    out
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (_, acc_std) = mean_std(r.results.iter().map(|x| x.accuracy));
            let (_, f1_std) = mean_std(r.results.iter().map(|x| x.f1));
            vec![
                r.name(),
                format_mean_std(r.accuracy, acc_std),
                format!("{:+.2}", r.delta_accuracy),
                format_mean_std(r.f1, f1_std),
                format!("{:+.2}", r.delta_f1),
            ]
        })
        .collect();
    aligned(&["excluded", "accuracy", "Δaccuracy", "f1", "Δf1"], &body)
}
