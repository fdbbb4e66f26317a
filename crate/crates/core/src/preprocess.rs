//! Data selection: ICD-9 family grouping, readmission labeling with death
//! exclusions, and cohort filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::codes::{self, CodeKind};
use crate::record::{AdmissionRecord, CodedEntry};
use crate::{Error, Result};

fn default_window_days() -> u32 {
    30
}

fn default_cohort_codes() -> BTreeSet<String> {
    // heart failure, cardiac dysrhythmias
    ["427", "428"].into_iter().map(String::from).collect()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    #[serde(default = "default_window_days")]
    pub window_days: u32,
    #[serde(default = "default_cohort_codes")]
    pub cohort_codes: BTreeSet<String>,
    /// Keep only admissions with a cohort diagnosis family.
    #[serde(default = "default_true")]
    pub filter_cohort: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            window_days: default_window_days(),
            cohort_codes: default_cohort_codes(),
            filter_cohort: true,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_days == 0 {
            return Err(Error::config("window_days must be at least 1"));
        }
        if self.filter_cohort && self.cohort_codes.is_empty() {
            return Err(Error::config("cohort_codes must be non-empty when cohort filtering is enabled"));
        }
        Ok(())
    }
}

/// Reduces an ICD-9 code to its family: everything before the dot.
pub fn group_icd_code(code: &str) -> Result<String> {
    if !codes::is_icd9_like(code) {
        return Err(Error::validation(format!("malformed ICD-9 code {code:?}")));
    }
    Ok(code.split_once('.').map_or(code, |(family, _)| family).to_string())
}

fn group_entries(entries: &[CodedEntry], kind: CodeKind) -> Result<Vec<CodedEntry>> {
    let table = codes::families(kind);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(entries.len());
    for entry in entries {
        let family = group_icd_code(&entry.code)?;
        if !seen.insert(family.clone()) {
            continue;
        }
        let description = table
            .description(&family)
            .ok_or_else(|| Error::validation(format!("no description for {kind:?} family {family:?}")))?;
        out.push(CodedEntry::new(family, description));
    }
    Ok(out)
}

/// Replaces every diagnosis and procedure code with its family, keeping the
/// first occurrence of each family within an admission.
pub fn group_records(records: Vec<AdmissionRecord>) -> Result<Vec<AdmissionRecord>> {
    records
        .into_iter()
        .map(|mut r| {
            r.diagnoses = group_entries(&r.diagnoses, CodeKind::Diagnosis)?;
            r.procedures = group_entries(&r.procedures, CodeKind::Procedure)?;
            Ok(r)
        })
        .collect()
}

/// Labels each admission and drops admissions ending in death.
///
/// An admission is positive iff the same patient is admitted again no more
/// than `window_days` after its discharge (inclusive). Admissions during
/// which the patient died, or followed by death within `window_days` of
/// discharge, are removed. Output is sorted by patient, admit day and
/// admission id, so input order does not matter.
pub fn label_and_exclude(records: Vec<AdmissionRecord>, config: &PreprocessConfig) -> Vec<AdmissionRecord> {
    let window = i64::from(config.window_days);
    let mut by_patient: BTreeMap<String, Vec<AdmissionRecord>> = BTreeMap::new();
    for r in records {
        by_patient.entry(r.patient_id.clone()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (_, mut admissions) in by_patient {
        admissions.sort_by(|a, b| (a.admit_day, &a.admission_id).cmp(&(b.admit_day, &b.admission_id)));
        let admit_days: Vec<i64> = admissions.iter().map(|a| a.admit_day).collect();
        for mut r in admissions {
            let readmitted = admit_days.iter().any(|&next| next > r.admit_day && next - r.discharge_day <= window);
            let died_in_window = r.deceased_day.is_some_and(|d| d >= r.admit_day && d <= r.discharge_day + window);
            if died_in_window {
                continue;
            }
            r.readmitted_within_window = Some(readmitted);
            out.push(r);
        }
    }
    out
}

/// Keeps admissions whose diagnosis families intersect the cohort codes.
pub fn filter_cohort(records: Vec<AdmissionRecord>, config: &PreprocessConfig) -> Vec<AdmissionRecord> {
    records
        .into_iter()
        .filter(|r| {
            r.diagnoses.iter().any(|d| config.cohort_codes.contains(d.code.split('.').next().unwrap_or(&d.code)))
        })
        .collect()
}

/// Grouping, labeling and (if configured) cohort filtering in one pass.
pub fn preprocess(records: Vec<AdmissionRecord>, config: &PreprocessConfig) -> Result<Vec<AdmissionRecord>> {
    config.validate()?;
    let labeled = label_and_exclude(group_records(records)?, config);
    Ok(if config.filter_cohort { filter_cohort(labeled, config) } else { labeled })
}

/// Counts of the processed dataset, in the shape of the missingness table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
    /// (field label, records missing it), in table order.
    pub missing: Vec<(String, usize)>,
}

impl DatasetSummary {
    pub fn from_records(records: &[AdmissionRecord]) -> Self {
        let count = |f: &dyn Fn(&AdmissionRecord) -> bool| records.iter().filter(|r| f(r)).count();
        let missing = vec![
            ("Gender", count(&|r| r.gender.is_none())),
            ("Religion", count(&|r| r.religion.is_none())),
            ("Marital Status", count(&|r| r.marital_status.is_none())),
            ("Race/Ethnicity", count(&|r| r.ethnicity.is_none())),
            ("Diseases/Diagnoses", count(&|r| r.diagnoses.is_empty())),
            ("Medication", count(&|r| r.medications.is_empty())),
            ("Procedures", count(&|r| r.procedures.is_empty())),
            ("Employment", count(&|r| r.employment.is_none())),
            ("Housing conditions", count(&|r| r.housing.is_none())),
            ("Household composition", count(&|r| r.household.is_none())),
        ];
        let positives = count(&|r| r.readmitted_within_window == Some(true));
        DatasetSummary {
            total: records.len(),
            positives,
            negatives: records.len() - positives,
            missing: missing.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let pct = |n: usize| if self.total == 0 { 0.0 } else { 100.0 * n as f64 / self.total as f64 };
        let mut s = String::new();
        let _ = writeln!(s, "Total admissions: {}", self.total);
        let _ = writeln!(s, "Readmitted:       {} ({:.1}%)", self.positives, pct(self.positives));
        let _ = writeln!(s, "Not readmitted:   {} ({:.1}%)", self.negatives, pct(self.negatives));
        let _ = writeln!(s);
        let width = self.missing.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max(11);
        let _ = writeln!(s, "{:<width$}  Records with missing information", "Information");
        for (field, n) in &self.missing {
            if *n == 0 {
                let _ = writeln!(s, "{field:<width$}  0");
            } else {
                let _ = writeln!(s, "{field:<width$}  {n} ({:.2}%)", pct(*n));
            }
        }
        s
    }
}
