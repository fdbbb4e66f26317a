//! Reproducible synthetic admission cohorts.
//!
//! Each patient gets a chain of admissions. Whether an admission is followed by
//! another one within [`READMISSION_WINDOW_DAYS`] is decided first (either at a
//! fixed rate solved so the cohort hits `readmission_rate`, or through a
//! planted logistic signal), and the gap to the next admission is then drawn
//! to agree with that decision. The gap model is an artifact choice; nothing
//! about real inter-admission gaps is implied.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::codes::{self, CodeKind};
use crate::record::{AdmissionRecord, CodedEntry, Gender, Medication};
use crate::{Error, Result};

/// Gap (discharge to next admission) the generator treats as a readmission.
pub const READMISSION_WINDOW_DAYS: i64 = 30;

/// Probability that a patient returns (after more than the window) following a
/// non-readmitted stay.
const CONTINUE_AFTER_NEGATIVE: f64 = 0.35;

/// Zipf exponent for code and medication frequencies.
const ZIPF_EXPONENT: f64 = 1.0;

/// Attempts at redrawing a final admission whose planted label came out positive.
const FINAL_ADMISSION_REDRAWS: usize = 50;

const MISSINGNESS_STREAM: u64 = 0x6d69_7373;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Facet {
    Religion,
    MaritalStatus,
    Ethnicity,
    Medication,
    Procedures,
    Employment,
    Housing,
    Household,
}

impl Facet {
    pub const ALL: [Facet; 8] = [
        Facet::Religion,
        Facet::MaritalStatus,
        Facet::Ethnicity,
        Facet::Medication,
        Facet::Procedures,
        Facet::Employment,
        Facet::Housing,
        Facet::Household,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Facet::Religion => "religion",
            Facet::MaritalStatus => "marital_status",
            Facet::Ethnicity => "ethnicity",
            Facet::Medication => "medication",
            Facet::Procedures => "procedures",
            Facet::Employment => "employment",
            Facet::Housing => "housing",
            Facet::Household => "household",
        }
    }

    pub fn from_name(name: &str) -> Result<Facet> {
        Facet::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::config(format!("unknown facet {name:?}")))
    }

    /// True when the facet carries no value in `record`.
    pub fn is_missing(self, record: &AdmissionRecord) -> bool {
        match self {
            Facet::Religion => record.religion.is_none(),
            Facet::MaritalStatus => record.marital_status.is_none(),
            Facet::Ethnicity => record.ethnicity.is_none(),
            Facet::Medication => record.medications.is_empty(),
            Facet::Procedures => record.procedures.is_empty(),
            Facet::Employment => record.employment.is_none(),
            Facet::Housing => record.housing.is_none(),
            Facet::Household => record.household.is_none(),
        }
    }

    fn blank(self, record: &mut AdmissionRecord) {
        match self {
            Facet::Religion => record.religion = None,
            Facet::MaritalStatus => record.marital_status = None,
            Facet::Ethnicity => record.ethnicity = None,
            Facet::Medication => record.medications.clear(),
            Facet::Procedures => record.procedures.clear(),
            Facet::Employment => record.employment = None,
            Facet::Housing => record.housing = None,
            Facet::Household => record.household = None,
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-facet probability that a generated value is blanked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct MissingnessProfile {
    rates: BTreeMap<Facet, f64>,
}

impl Default for MissingnessProfile {
    /// Missing-record percentages of the processed MIMIC-III admissions.
    fn default() -> Self {
        MissingnessProfile {
            rates: BTreeMap::from([
                (Facet::Religion, 0.3469),
                (Facet::MaritalStatus, 0.1877),
                (Facet::Ethnicity, 0.0923),
                (Facet::Medication, 0.1566),
                (Facet::Procedures, 0.1174),
                (Facet::Employment, 0.4977),
                (Facet::Housing, 0.9696),
                (Facet::Household, 0.8375),
            ]),
        }
    }
}

impl MissingnessProfile {
    pub fn zeros() -> Self {
        MissingnessProfile { rates: Facet::ALL.into_iter().map(|f| (f, 0.0)).collect() }
    }

    /// Builds a profile from facet names; unnamed facets default to 0.
    pub fn from_named<'a>(rates: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let mut profile = Self::zeros();
        for (name, rate) in rates {
            profile = profile.with(Facet::from_name(name)?, rate)?;
        }
        Ok(profile)
    }

    pub fn with(mut self, facet: Facet, rate: f64) -> Result<Self> {
        check_fraction(facet.name(), rate)?;
        self.rates.insert(facet, rate);
        Ok(self)
    }

    pub fn rate(&self, facet: Facet) -> f64 {
        self.rates.get(&facet).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.iter().try_for_each(|(f, &r)| check_fraction(f.name(), r))
    }
}

impl TryFrom<BTreeMap<String, f64>> for MissingnessProfile {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        Self::from_named(map.iter().map(|(k, &v)| (k.as_str(), v)))
    }
}

impl From<MissingnessProfile> for BTreeMap<String, f64> {
    fn from(p: MissingnessProfile) -> Self {
        p.rates.into_iter().map(|(f, r)| (f.name().to_string(), r)).collect()
    }
}

/// Label model that ties readmission to the clinical content of an admission.
///
/// The readmission probability of an admission is
/// `logistic(bias + Σ weights of present families/medications + N(0, noise_std²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignal {
    /// Diagnosis family code → weight.
    #[serde(default)]
    pub diagnoses: BTreeMap<String, f64>,
    /// Procedure family code → weight.
    #[serde(default)]
    pub procedures: BTreeMap<String, f64>,
    /// Medication name → weight.
    #[serde(default)]
    pub medications: BTreeMap<String, f64>,
    pub bias: f64,
    #[serde(default)]
    pub noise_std: f64,
}

impl PlantedSignal {
    /// Alternating-sign weights of magnitude `magnitude` on the `n_diagnoses`
    /// most frequent diagnosis families and `n_medications` most frequent medications.
    pub fn on_frequent_codes(
        n_diagnoses: usize,
        n_medications: usize,
        magnitude: f64,
        bias: f64,
        noise_std: f64,
    ) -> Self {
        let sign = |i: usize| if i.is_multiple_of(2) { magnitude } else { -magnitude };
        let dx = codes::diagnosis_families();
        PlantedSignal {
            diagnoses: (0..n_diagnoses.min(dx.len())).map(|i| (dx.get(i).0.to_string(), sign(i))).collect(),
            procedures: BTreeMap::new(),
            medications: codes::medications()
                .iter()
                .take(n_medications)
                .enumerate()
                .map(|(i, m)| (m.to_string(), sign(i)))
                .collect(),
            bias,
            noise_std,
        }
    }

    /// Noise-free logit of a record; fine codes are reduced to their family first.
    pub fn logit(&self, record: &AdmissionRecord) -> f64 {
        let family = |code: &str| code.split('.').next().unwrap_or(code).to_string();
        let dx: BTreeSet<String> = record.diagnoses.iter().map(|d| family(&d.code)).collect();
        let px: BTreeSet<String> = record.procedures.iter().map(|d| family(&d.code)).collect();
        let meds: BTreeSet<&str> = record.medications.iter().map(|m| m.name.as_str()).collect();
        self.bias
            + dx.iter().filter_map(|c| self.diagnoses.get(c)).sum::<f64>()
            + px.iter().filter_map(|c| self.procedures.get(c)).sum::<f64>()
            + meds.iter().filter_map(|m| self.medications.get(*m)).sum::<f64>()
    }

    fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config(format!("noise_std must be a nonnegative real, got {}", self.noise_std)));
        }
        let all = self.diagnoses.values().chain(self.procedures.values()).chain(self.medications.values());
        if !self.bias.is_finite() || all.into_iter().any(|w| !w.is_finite()) {
            return Err(Error::config("planted signal weights must be finite"));
        }
        Ok(())
    }
}

fn default_max_admissions() -> usize {
    6
}

fn default_readmission_rate() -> f64 {
    0.092
}

fn default_deceased_rate() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n_patients: usize,
    #[serde(default = "default_max_admissions")]
    pub max_admissions_per_patient: usize,
    /// Target fraction of retained admissions followed by a readmission.
    /// Ignored when a planted signal decides labels.
    #[serde(default = "default_readmission_rate")]
    pub readmission_rate: f64,
    #[serde(default)]
    pub missingness: MissingnessProfile,
    #[serde(default)]
    pub planted_signal: Option<PlantedSignal>,
    /// Fraction of patients who die during their last admission.
    #[serde(default = "default_deceased_rate")]
    pub deceased_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            n_patients: 1000,
            max_admissions_per_patient: default_max_admissions(),
            readmission_rate: default_readmission_rate(),
            missingness: MissingnessProfile::default(),
            planted_signal: None,
            deceased_rate: default_deceased_rate(),
            seed: 0,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        check_fraction("readmission_rate", self.readmission_rate)?;
        check_fraction("deceased_rate", self.deceased_rate)?;
        if self.max_admissions_per_patient == 0 {
            return Err(Error::config("max_admissions_per_patient must be positive"));
        }
        self.missingness.validate()?;
        if let Some(signal) = &self.planted_signal {
            signal.validate()?;
        }
        Ok(())
    }
}

fn check_fraction(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must lie in [0, 1], got {value}")))
    }
}

/// Generates the cohort described by `config`, missingness included.
pub fn generate_cohort(config: &CohortConfig) -> Result<Vec<AdmissionRecord>> {
    config.validate()?;
    let label_model = match &config.planted_signal {
        Some(signal) => LabelModel::Planted {
            signal,
            noise: Normal::new(0.0, signal.noise_std).map_err(|e| Error::config(e.to_string()))?,
        },
        None => LabelModel::Rate(solve_readmission_probability(
            config.readmission_rate,
            config.max_admissions_per_patient,
            config.deceased_rate,
        )?),
    };
    let sampler = ContentSampler::new();
    let mut records = Vec::new();
    for p in 0..config.n_patients {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(p as u64);
        generate_patient(p, config, &label_model, &sampler, &mut rng, &mut records);
    }
    apply_missingness(records, &config.missingness, config.seed ^ MISSINGNESS_STREAM)
}

/// Independently blanks each facet of each record with its configured probability.
/// Gender is never blanked.
pub fn apply_missingness(
    mut records: Vec<AdmissionRecord>,
    profile: &MissingnessProfile,
    seed: u64,
) -> Result<Vec<AdmissionRecord>> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for record in &mut records {
        for facet in Facet::ALL {
            // Always draw, so the stream position does not depend on the rates.
            let u: f64 = rng.random();
            if u < profile.rate(facet) {
                facet.blank(record);
            }
        }
    }
    Ok(records)
}

enum LabelModel<'a> {
    Rate(f64),
    Planted { signal: &'a PlantedSignal, noise: Normal<f64> },
}

impl LabelModel<'_> {
    fn draw(&self, record: &AdmissionRecord, rng: &mut ChaCha8Rng) -> bool {
        match self {
            LabelModel::Rate(q) => rng.random_bool(*q),
            LabelModel::Planted { signal, noise } => {
                let z = signal.logit(record) + noise.sample(rng);
                rng.random::<f64>() < logistic(z)
            }
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Expected fraction of retained admissions that are readmissions, when each
/// non-final admission is readmitted with probability `q`.
fn expected_positive_rate(q: f64, max_admissions: usize, deceased_rate: f64) -> f64 {
    let step = q + (1.0 - q) * CONTINUE_AFTER_NEGATIVE;
    let mut reach = 1.0;
    let (mut admissions, mut positives) = (0.0, 0.0);
    for i in 0..max_admissions {
        admissions += reach;
        if i + 1 < max_admissions {
            positives += q * reach;
        }
        reach *= step;
    }
    // Deceased patients lose their (always negative) final admission.
    let retained = admissions - deceased_rate;
    if retained <= 0.0 {
        0.0
    } else {
        positives / retained
    }
}

fn solve_readmission_probability(target: f64, max_admissions: usize, deceased_rate: f64) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    let reachable = expected_positive_rate(1.0, max_admissions, deceased_rate);
    if reachable < target {
        return Err(Error::config(format!(
            "readmission_rate {target} is unattainable with max_admissions_per_patient = {max_admissions} (at most {reachable:.3})"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_positive_rate(mid, max_admissions, deceased_rate) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const QUALIFIERS: [&str; 10] = [
    "unspecified",
    "initial episode of care",
    "subsequent episode of care",
    "with complication",
    "without complication",
    "acute",
    "chronic",
    "acute on chronic",
    "other specified",
    "site unspecified",
];

struct ContentSampler {
    diagnoses: WeightedIndex<f64>,
    procedures: WeightedIndex<f64>,
    medications: WeightedIndex<f64>,
    ethnicity: WeightedIndex<f64>,
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-ZIPF_EXPONENT))).expect("non-empty weights")
}

impl ContentSampler {
    fn new() -> Self {
        ContentSampler {
            diagnoses: zipf(codes::diagnosis_families().len()),
            procedures: zipf(codes::procedure_families().len()),
            medications: zipf(codes::medications().len()),
            ethnicity: WeightedIndex::new([0.70, 0.12, 0.06, 0.05, 0.01, 0.01, 0.05]).expect("valid weights"),
        }
    }

    fn codes(&self, kind: CodeKind, count: usize, rng: &mut ChaCha8Rng) -> Vec<CodedEntry> {
        let table = codes::families(kind);
        let dist = match kind {
            CodeKind::Diagnosis => &self.diagnoses,
            CodeKind::Procedure => &self.procedures,
        };
        let mut out: Vec<CodedEntry> = Vec::with_capacity(count);
        while out.len() < count {
            let (family, desc) = table.get(dist.sample(rng));
            let entry = if rng.random_bool(0.2) {
                CodedEntry::new(family, desc)
            } else {
                let digits = if rng.random_bool(0.6) { 1 } else { 2 };
                let sub: u32 = rng.random_range(0..10u32.pow(digits));
                let code = format!("{family}.{sub:0width$}", width = digits as usize);
                CodedEntry::new(code, format!("{desc}, {}", QUALIFIERS[(sub % 10) as usize]))
            };
            if !out.iter().any(|e| e.code == entry.code) {
                out.push(entry);
            }
        }
        out
    }

    fn medications(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Medication> {
        let names = codes::medications();
        let mut chosen = BTreeSet::new();
        while chosen.len() < count {
            chosen.insert(self.medications.sample(rng));
        }
        chosen.into_iter().map(|i| Medication { name: names[i].to_string() }).collect()
    }

    fn fill_clinical(&self, record: &mut AdmissionRecord, rng: &mut ChaCha8Rng) {
        let n_dx = rng.random_range(3..=14);
        let n_px = rng.random_range(1..=5);
        let n_med = rng.random_range(2..=12);
        record.diagnoses = self.codes(CodeKind::Diagnosis, n_dx, rng);
        record.procedures = self.codes(CodeKind::Procedure, n_px, rng);
        record.medications = self.medications(n_med, rng);
    }
}

fn pick<'a>(values: &[&'a str], rng: &mut ChaCha8Rng) -> &'a str {
    values[rng.random_range(0..values.len())]
}

fn generate_patient(
    index: usize,
    config: &CohortConfig,
    labels: &LabelModel<'_>,
    sampler: &ContentSampler,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<AdmissionRecord>,
) {
    let patient_id = format!("P{index:06}");
    let gender = if rng.random_bool(0.5) { Gender::Male } else { Gender::Female };
    // max of two uniforms skews the cohort towards older patients
    let base_age = 18 + rng.random_range(0..72u32).max(rng.random_range(0..72u32));
    let marital = pick(codes::MARITAL_STATUSES, rng);
    let religion = pick(codes::RELIGIONS, rng);
    let ethnicity = codes::ETHNICITIES[sampler.ethnicity.sample(rng)];
    let employment = if base_age >= 67 && rng.random_bool(0.7) { "retired" } else { pick(codes::EMPLOYMENT, rng) };
    let housing = pick(codes::HOUSING, rng);
    let household = pick(codes::HOUSEHOLD, rng);
    let dies = rng.random_bool(config.deceased_rate);

    let first = out.len();
    let mut day: i64 = rng.random_range(0..=3650);
    let max = config.max_admissions_per_patient;
    for k in 0..max {
        let stay = rng.random_range(1..=20i64);
        let age = base_age + (day - out.get(first).map_or(day, |r| r.admit_day)) as u32 / 365;
        let mut record = AdmissionRecord::bare(&patient_id, &format!("A{index:06}{k:02}"), day, day + stay, age);
        record.gender = Some(gender);
        record.marital_status = Some(marital.to_string());
        record.religion = Some(religion.to_string());
        record.ethnicity = Some(ethnicity.to_string());
        record.employment = Some(employment.to_string());
        record.housing = Some(housing.to_string());
        record.household = Some(household.to_string());
        sampler.fill_clinical(&mut record, rng);

        let last_allowed = k + 1 == max;
        let readmitted = if last_allowed {
            if matches!(labels, LabelModel::Planted { .. }) {
                // The final admission has no successor, so its content is redrawn
                // until the planted label agrees with that.
                for _ in 0..FINAL_ADMISSION_REDRAWS {
                    if !labels.draw(&record, rng) {
                        break;
                    }
                    sampler.fill_clinical(&mut record, rng);
                }
            }
            false
        } else {
            labels.draw(&record, rng)
        };
        let discharge = record.discharge_day;
        out.push(record);

        let gap = if readmitted {
            rng.random_range(1..=READMISSION_WINDOW_DAYS)
        } else if !last_allowed && rng.random_bool(CONTINUE_AFTER_NEGATIVE) {
            rng.random_range(READMISSION_WINDOW_DAYS + 1..=720)
        } else {
            break;
        };
        day = discharge + gap;
    }

    if dies {
        let last = out.last_mut().expect("every patient has an admission");
        let death = rng.random_range(last.admit_day..=last.discharge_day);
        for r in &mut out[first..] {
            r.deceased_day = Some(death);
        }
    }
}
