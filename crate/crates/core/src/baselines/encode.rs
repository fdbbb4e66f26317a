use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::record::AdmissionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    OneHot,
    Ordinal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub columns: Vec<Column>,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn subset(&self, indices: &[usize]) -> TabularDataset {
        TabularDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            columns: self.columns.clone(),
        }
    }
}

const CATEGORICAL: [&str; 8] =
    ["gender", "religion", "marital_status", "age_group", "ethnicity", "employment", "housing", "household"];

fn categorical(record: &AdmissionRecord, column: &str) -> Option<String> {
    match column {
        "gender" => record.gender.map(|g| g.description().to_string()),
        "religion" => record.religion.clone(),
        "marital_status" => record.marital_status.clone(),
        "age_group" => Some(record.age_group()),
        "ethnicity" => record.ethnicity.clone(),
        "employment" => record.employment.clone(),
        "housing" => record.housing.clone(),
        "household" => record.household.clone(),
        _ => unreachable!("fixed column list"),
    }
}

/// Tabular encoding of a corpus.
///
/// Columns are the diagnosis codes, medication names and procedure codes of the
/// corpus as one-hot blocks (each block sorted), then eight categorical columns
/// holding `1 + rank` of the value among the sorted corpus values, or 0 when
/// missing. Unlabelled records encode as negatives.
pub fn encode_tabular(records: &[AdmissionRecord]) -> TabularDataset {
    let dx: BTreeSet<&str> = records.iter().flat_map(|r| r.diagnoses.iter().map(|d| d.code.as_str())).collect();
    let meds: BTreeSet<&str> = records.iter().flat_map(|r| r.medications.iter().map(|m| m.name.as_str())).collect();
    let px: BTreeSet<&str> = records.iter().flat_map(|r| r.procedures.iter().map(|p| p.code.as_str())).collect();
    let levels: Vec<BTreeMap<String, usize>> = CATEGORICAL
        .iter()
        .map(|c| {
            let values: BTreeSet<String> = records.iter().filter_map(|r| categorical(r, c)).collect();
            values.into_iter().enumerate().map(|(i, v)| (v, i + 1)).collect()
        })
        .collect();

    let mut columns = Vec::new();
    let mut index: BTreeMap<(u8, &str), usize> = BTreeMap::new();
    for (block, prefix, names) in [(0u8, "diagnosis", &dx), (1, "medication", &meds), (2, "procedure", &px)] {
        for name in names.iter() {
            index.insert((block, name), columns.len());
            columns.push(Column { name: format!("{prefix}:{name}"), kind: ColumnKind::OneHot });
        }
    }
    let categorical_start = columns.len();
    columns.extend(CATEGORICAL.iter().map(|c| Column { name: c.to_string(), kind: ColumnKind::Ordinal }));

    let features = records
        .iter()
        .map(|r| {
            let mut row = vec![0.0; columns.len()];
            for d in &r.diagnoses {
                row[index[&(0, d.code.as_str())]] = 1.0;
            }
            for m in &r.medications {
                row[index[&(1, m.name.as_str())]] = 1.0;
            }
            for p in &r.procedures {
                row[index[&(2, p.code.as_str())]] = 1.0;
            }
            for (j, c) in CATEGORICAL.iter().enumerate() {
                if let Some(v) = categorical(r, c) {
                    row[categorical_start + j] = levels[j][&v] as f64;
                }
            }
            row
        })
        .collect();
    TabularDataset {
        features,
        labels: records.iter().map(|r| r.readmitted_within_window.unwrap_or(false)).collect(),
        columns,
    }
}
