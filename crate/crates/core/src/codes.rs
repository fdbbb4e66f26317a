//! Bundled ICD-9 family tables, medication names and categorical facet values.

use std::collections::HashMap;
use std::sync::OnceLock;

const DIAGNOSIS_TSV: &str = include_str!("../data/icd9_diagnosis_families.tsv");
const PROCEDURE_TSV: &str = include_str!("../data/icd9_procedure_families.tsv");
const MEDICATIONS_TXT: &str = include_str!("../data/medications.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodeKind {
    Diagnosis,
    Procedure,
}

/// Family code → description table, kept in frequency-rank order.
#[derive(Debug)]
pub struct FamilyTable {
    entries: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

impl FamilyTable {
    fn parse(text: &str) -> Self {
        let entries: Vec<(String, String)> = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (code, desc) = l.split_once('\t').expect("bundled table rows are tab separated");
                (code.trim().to_string(), desc.trim().to_string())
            })
            .collect();
        let index = entries.iter().enumerate().map(|(i, (c, _))| (c.clone(), i)).collect();
        FamilyTable { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn description(&self, family: &str) -> Option<&str> {
        self.index.get(family).map(|&i| self.entries[i].1.as_str())
    }

    pub fn contains(&self, family: &str) -> bool {
        self.index.contains_key(family)
    }

    /// Entry at frequency rank `rank` (0 = most common).
    pub fn get(&self, rank: usize) -> (&str, &str) {
        let (c, d) = &self.entries[rank];
        (c, d)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(c, d)| (c.as_str(), d.as_str()))
    }
}

pub fn diagnosis_families() -> &'static FamilyTable {
    static TABLE: OnceLock<FamilyTable> = OnceLock::new();
    TABLE.get_or_init(|| FamilyTable::parse(DIAGNOSIS_TSV))
}

pub fn procedure_families() -> &'static FamilyTable {
    static TABLE: OnceLock<FamilyTable> = OnceLock::new();
    TABLE.get_or_init(|| FamilyTable::parse(PROCEDURE_TSV))
}

pub fn families(kind: CodeKind) -> &'static FamilyTable {
    match kind {
        CodeKind::Diagnosis => diagnosis_families(),
        CodeKind::Procedure => procedure_families(),
    }
}

pub fn medications() -> &'static [&'static str] {
    static MEDS: OnceLock<Vec<&'static str>> = OnceLock::new();
    MEDS.get_or_init(|| MEDICATIONS_TXT.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

/// Checks the ICD-9-like shape `[EV]?\d{3,4}(\.\d{1,3})?`, additionally
/// accepting the two-digit stems of supplementary V codes (`V45.81`).
pub fn is_icd9_like(code: &str) -> bool {
    let min_stem = if code.starts_with('V') { 2 } else { 3 };
    let body = code.strip_prefix(['E', 'V']).unwrap_or(code);
    let (stem, sub) = match body.split_once('.') {
        Some((s, d)) => (s, Some(d)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(stem) || !(min_stem..=4).contains(&stem.len()) {
        return false;
    }
    match sub {
        None => true,
        Some(d) => digits(d) && d.len() <= 3,
    }
}

pub const RELIGIONS: &[&str] = &[
    "catholic",
    "protestant quaker",
    "jewish",
    "episcopalian",
    "greek orthodox",
    "christian scientist",
    "buddhist",
    "muslim",
    "hindu",
    "unitarian universalist",
];

pub const MARITAL_STATUSES: &[&str] = &["married", "single", "widowed", "divorced", "separated", "life partner"];

pub const ETHNICITIES: &[&str] = &[
    "white",
    "black african american",
    "hispanic or latino",
    "asian",
    "american indian alaska native",
    "native hawaiian or other pacific islander",
    "multi race ethnicity",
];

pub const EMPLOYMENT: &[&str] = &["employed", "unemployed", "retired", "disabled", "student"];

pub const HOUSING: &[&str] = &[
    "homeless",
    "unstable housing",
    "lives in nursing home",
    "lives in assisted living facility",
    "lives in own home",
];

pub const HOUSEHOLD: &[&str] = &[
    "lives alone",
    "lives with spouse",
    "lives with family",
    "lives with partner",
    "lives with children",
    "lives with caregiver",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_are_large_enough_and_well_formed() {
        let dx = diagnosis_families();
        let px = procedure_families();
        assert!(dx.len() >= 200, "{} diagnosis families", dx.len());
        assert!(px.len() >= 100, "{} procedure families", px.len());
        for code in ["410", "427", "428"] {
            assert!(dx.contains(code), "missing {code}");
        }
        for (code, desc) in dx.iter().chain(px.iter()) {
            assert!(is_icd9_like(code), "bad family code {code}");
            assert!(!code.contains('.'));
            assert!(!desc.is_empty());
        }
        assert_eq!(dx.description("410"), Some("acute myocardial infarction"));
    }

    #[test]
    fn medication_names_unique() {
        let meds = medications();
        let mut sorted = meds.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), meds.len());
    }

    #[test]
    fn icd9_shape() {
        for ok in ["410", "410.0", "V45.81", "E878", "E878.1", "0389", "038.9", "250.001"] {
            assert!(is_icd9_like(ok), "{ok}");
        }
        for bad in ["", "41", "41.0", "E87", "V4", "X410", "410.", "410.1234", "41a", "V", "12345", ".12", "EV410"] {
            assert!(!is_icd9_like(bad), "{bad}");
        }
    }
}
