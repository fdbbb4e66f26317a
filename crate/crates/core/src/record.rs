//! The per-admission record and its newline-delimited JSON form.
//!
//! One JSON object per line. Absent facets are encoded by omitting the key;
//! empty code and medication lists are omitted as well.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "M")]
    Male,
    #[serde(rename = "F")]
    Female,
}

impl Gender {
    pub fn description(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CodedEntry {
    pub code: String,
    pub description: String,
}

impl CodedEntry {
    pub fn new(code: impl Into<String>, description: impl Into<String>) -> Self {
        CodedEntry { code: code.into(), description: description.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Medication {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissionRecord {
    pub patient_id: String,
    pub admission_id: String,
    pub admit_day: i64,
    pub discharge_day: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deceased_day: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    pub age_years: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marital_status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub religion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ethnicity: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnoses: Vec<CodedEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub procedures: Vec<CodedEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub medications: Vec<Medication>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub employment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub housing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub household: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readmitted_within_window: Option<bool>,
}

impl AdmissionRecord {
    /// A record with only identifiers, interval and age set.
    pub fn bare(patient_id: &str, admission_id: &str, admit_day: i64, discharge_day: i64, age_years: u32) -> Self {
        AdmissionRecord {
            patient_id: patient_id.to_string(),
            admission_id: admission_id.to_string(),
            admit_day,
            discharge_day,
            deceased_day: None,
            gender: None,
            age_years,
            marital_status: None,
            religion: None,
            ethnicity: None,
            diagnoses: Vec::new(),
            procedures: Vec::new(),
            medications: Vec::new(),
            employment: None,
            housing: None,
            household: None,
            readmitted_within_window: None,
        }
    }

    /// Decade bucket such as `"60-69"`.
    pub fn age_group(&self) -> String {
        let lo = self.age_years / 10 * 10;
        format!("{}-{}", lo, lo + 9)
    }
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[AdmissionRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl_string(records: &[AdmissionRecord]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<AdmissionRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        records.push(rec);
    }
    Ok(records)
}
