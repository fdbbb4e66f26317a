//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! when any criterion fails.
//!
//! `ACCEPTANCE_ONLY=1,3` restricts the run to the listed criteria.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use pkgraph::baselines::{encode_tabular, BaselineKind, TabularDataset};
use pkgraph::cohortgen::{generate_cohort, CohortConfig, Facet, MissingnessProfile, PlantedSignal};
use pkgraph::gnn::{backward, bce_loss, model_forward, Arch, ModelParams, ModelSpec, Variant};
use pkgraph::graphx::{
    ablate, build_vocabulary, relation_set, to_numeric, AblationFacet, Direction, GraphVersion, NumericGraph, Version,
};
use pkgraph::harness::{balanced_splits, mean_std, run_protocol, BaselineTrainer, GnnTrainer, Protocol, Trainer};
use pkgraph::pkg::{build_pkg, parse_ntriples, serialize_ntriples, FacetCategory, HspoSchema};
use pkgraph::preprocess::{group_icd_code, preprocess, PreprocessConfig};
use pkgraph::AdmissionRecord;

// Pinned tolerances.
const FD_STEP: f64 = 1e-5;
const FD_MAX_RELATIVE_ERROR: f64 = 1e-4;
/// Denominator floor of the relative error, so vanishing gradients compare absolutely.
const FD_DENOMINATOR_FLOOR: f64 = 1e-6;
const FD_BUDGET_S: f64 = 120.0;
const LEARNABILITY_MIN_ACCURACY: f64 = 70.0;
const LEARNABILITY_MARGIN: f64 = 3.0;
const LEARNABILITY_BUDGET_S: f64 = 900.0;
const DIRECTION_GAP: f64 = 5.0;
const ABLATION_MARGIN: f64 = 2.0;
const MISSINGNESS_TOLERANCE: f64 = 0.015;
const PLANTED_ADMISSIONS: usize = 2000;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn main() -> ExitCode {
    // Acceptance timings are single-threaded.
    std::env::set_var("RAYON_NUM_THREADS", "1");
    let only: Option<BTreeSet<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|c| c.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().is_none_or(|set| set.contains(&n));

    let mut planted: Option<PlantedCohort> = None;
    let mut undirected_accuracy: Option<f64> = None;
    let mut failures = 0;
    for n in 1..=8u32 {
        if !wanted(n) {
            continue;
        }
        let started = Instant::now();
        let (name, outcome) = match n {
            1 => ("gradient correctness", gradient_correctness()),
            2 => ("structural exactness", structural_exactness()),
            3 => ("pipeline laws", pipeline_laws()),
            4 => {
                let cohort = planted.get_or_insert_with(PlantedCohort::build);
                let (outcome, acc) = learnability(cohort);
                undirected_accuracy = Some(acc);
                ("learnability on planted signal", outcome)
            }
            5 => {
                let cohort = planted.get_or_insert_with(PlantedCohort::build);
                let u = *undirected_accuracy.get_or_insert_with(|| cohort.gnn_accuracy(&cohort.undirected, None));
                ("directed vs undirected trainability", direction_gap(cohort, u))
            }
            6 => {
                let cohort = planted.get_or_insert_with(PlantedCohort::build);
                ("ablation ordering", ablation_ordering(cohort))
            }
            7 => ("determinism of the CLI chain", determinism()),
            _ => ("missingness fidelity", missingness_fidelity()),
        };
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} {name}: {status} | {} | {:.1}s", outcome.detail, started.elapsed().as_secs_f64());
        if !outcome.pass {
            failures += 1;
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

fn synthetic_records(n_admissions: usize, signal: Option<PlantedSignal>, seed: u64) -> Vec<AdmissionRecord> {
    let mut n_patients = n_admissions / 2 + 1;
    loop {
        let config = CohortConfig { n_patients, planted_signal: signal.clone(), seed, ..CohortConfig::default() };
        let pre = PreprocessConfig { filter_cohort: false, ..PreprocessConfig::default() };
        let records = preprocess(generate_cohort(&config).unwrap(), &pre).unwrap();
        if records.len() >= n_admissions {
            return records.into_iter().take(n_admissions).collect();
        }
        n_patients += n_patients / 2;
    }
}

fn numeric_graphs(records: &[AdmissionRecord], gv: GraphVersion) -> Vec<NumericGraph> {
    let graphs: Vec<_> = records.iter().map(|r| build_pkg(r, &HspoSchema).unwrap()).collect();
    let vocab = build_vocabulary(&graphs).unwrap();
    graphs.iter().map(|g| to_numeric(g, gv, &vocab).unwrap()).collect()
}

// ---------------------------------------------------------------------------
// 1

/// Keeps a random subset of a record's optional leaves.
fn trimmed(record: &AdmissionRecord, keep: usize, rng: &mut ChaCha8Rng) -> AdmissionRecord {
    #[derive(Clone, Copy)]
    enum Leaf {
        Gender,
        Marital,
        Religion,
        Ethnicity,
        Employment,
        Housing,
        Household,
        Diagnosis(usize),
        Procedure(usize),
        Medication(usize),
    }
    let mut leaves = Vec::new();
    let present = [
        (record.gender.is_some(), Leaf::Gender),
        (record.marital_status.is_some(), Leaf::Marital),
        (record.religion.is_some(), Leaf::Religion),
        (record.ethnicity.is_some(), Leaf::Ethnicity),
        (record.employment.is_some(), Leaf::Employment),
        (record.housing.is_some(), Leaf::Housing),
        (record.household.is_some(), Leaf::Household),
    ];
    leaves.extend(present.iter().filter(|p| p.0).map(|p| p.1));
    leaves.extend((0..record.diagnoses.len()).map(Leaf::Diagnosis));
    leaves.extend((0..record.procedures.len()).map(Leaf::Procedure));
    leaves.extend((0..record.medications.len()).map(Leaf::Medication));
    leaves.shuffle(rng);
    leaves.truncate(keep);

    let mut out = AdmissionRecord::bare(
        &record.patient_id,
        &record.admission_id,
        record.admit_day,
        record.discharge_day,
        record.age_years,
    );
    out.readmitted_within_window = Some(rng.random_bool(0.5));
    for leaf in leaves {
        match leaf {
            Leaf::Gender => out.gender = record.gender,
            Leaf::Marital => out.marital_status = record.marital_status.clone(),
            Leaf::Religion => out.religion = record.religion.clone(),
            Leaf::Ethnicity => out.ethnicity = record.ethnicity.clone(),
            Leaf::Employment => out.employment = record.employment.clone(),
            Leaf::Housing => out.housing = record.housing.clone(),
            Leaf::Household => out.household = record.household.clone(),
            Leaf::Diagnosis(i) => out.diagnoses.push(record.diagnoses[i].clone()),
            Leaf::Procedure(i) => out.procedures.push(record.procedures[i].clone()),
            Leaf::Medication(i) => out.medications.push(record.medications[i].clone()),
        }
    }
    out
}

/// A graph of 6 to 12 nodes (9 to 12 for V4, which always carries 7 group nodes).
fn small_graph(pool: &[AdmissionRecord], gv: GraphVersion, rng: &mut ChaCha8Rng) -> NumericGraph {
    let (lo, overhead) = if gv.version == Version::V4 { (9, 8) } else { (6, 1) };
    loop {
        let target = rng.random_range(lo..=12usize);
        let record = trimmed(pool.choose(rng).unwrap(), target - overhead, rng);
        let g = &numeric_graphs(std::slice::from_ref(&record), gv)[0];
        if (lo..=12).contains(&g.n_nodes) {
            return g.clone();
        }
    }
}

fn max_relative_error(g: &NumericGraph, params: &mut ModelParams) -> f64 {
    let label = g.label == 1;
    let (_, analytic) = backward(g, params, label).unwrap();
    let analytic: Vec<Vec<f64>> = analytic.tensors().into_iter().map(|(_, _, d)| d.to_vec()).collect();
    let mut worst: f64 = 0.0;
    for (t, exact) in analytic.iter().enumerate() {
        for (i, &a) in exact.iter().enumerate() {
            let original = params.tensors_mut()[t][i];
            params.tensors_mut()[t][i] = original + FD_STEP;
            let plus = bce_loss(model_forward(g, params).unwrap(), label);
            params.tensors_mut()[t][i] = original - FD_STEP;
            let minus = bce_loss(model_forward(g, params).unwrap(), label);
            params.tensors_mut()[t][i] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_DENOMINATOR_FLOOR);
            worst = worst.max(err);
        }
    }
    worst
}

fn gradient_correctness() -> Outcome {
    let started = Instant::now();
    let pool = synthetic_records(200, None, 101);
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: (f64, String) = (0.0, String::new());
    let mut checked = 0;
    let mut n_params = 0;
    for gv in GraphVersion::all() {
        for arch in Arch::ALL {
            for variant in Variant::ALL {
                let g = small_graph(&pool, gv, &mut rng);
                let spec = ModelSpec::new(arch, variant, g.vocab_size, g.n_relations());
                let mut params = ModelParams::init(spec, rng.random()).unwrap();
                n_params += params.n_params();
                let err = max_relative_error(&g, &mut params);
                checked += 1;
                if err > worst.0 {
                    worst = (err, format!("{gv} {arch} {variant}, {} nodes", g.n_nodes));
                }
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    Outcome::new(
        worst.0 <= FD_MAX_RELATIVE_ERROR && elapsed < FD_BUDGET_S,
        format!(
            "{checked} configurations, {n_params} parameters, max relative error {:.2e} ({}) <= {FD_MAX_RELATIVE_ERROR:e}, {elapsed:.1}s < {FD_BUDGET_S}s",
            worst.0, worst.1
        ),
    )
}

// ---------------------------------------------------------------------------
// 2

fn structural_exactness() -> Outcome {
    let records = synthetic_records(1000, None, 201);
    let mut problems = Vec::new();
    let expected = [(Version::V1, 8), (Version::V2, 4), (Version::V3, 1)];
    for (version, n) in expected {
        if relation_set(version).len() != n {
            problems.push(format!("{version} has {} relations", relation_set(version).len()));
        }
    }
    let mut graphs_checked = 0;
    for gv in GraphVersion::all() {
        for g in numeric_graphs(&records, gv) {
            graphs_checked += 1;
            let groups = g.node_facets.iter().filter(|&&c| c == FacetCategory::Group).count();
            let want_groups = if gv.version == Version::V4 { 7 } else { 0 };
            if groups != want_groups {
                problems.push(format!("{} {gv}: {groups} group nodes", g.id));
            }
            if g.edges.len() != relation_set(gv.version).len() {
                problems.push(format!("{} {gv}: {} edge lists", g.id, g.edges.len()));
            }
            if gv.direction == Direction::Directed
                && gv.version != Version::V4
                && g.edges.iter().flat_map(|l| l.iter()).any(|(_, t)| t != g.patient_index)
            {
                problems.push(format!("{} {gv}: edge not targeting the patient", g.id));
            }
        }
    }
    Outcome::new(
        problems.is_empty() && records.len() == 1000,
        format!(
            "{} records, {graphs_checked} graphs over 8 versions, {} violations{}",
            records.len(),
            problems.len(),
            problems.first().map_or_else(String::new, |p| format!(" (first: {p})"))
        ),
    )
}

// ---------------------------------------------------------------------------
// 3

fn fuzz_code(rng: &mut ChaCha8Rng) -> (String, bool) {
    let digits = |rng: &mut ChaCha8Rng, n: usize| -> String {
        (0..n).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
    };
    if rng.random_bool(0.8) {
        let prefix = ["", "", "E", "V"][rng.random_range(0..4)];
        let stem = rng.random_range(3..=4);
        let mut code = format!("{prefix}{}", digits(rng, stem));
        if rng.random_bool(0.5) {
            let n = rng.random_range(1..=3);
            code = format!("{code}.{}", digits(rng, n));
        }
        (code, true)
    } else {
        let alphabet: Vec<char> = "0123456789.EVX- ".chars().collect();
        let len = rng.random_range(0..9);
        ((0..len).map(|_| *alphabet.choose(rng).unwrap()).collect(), false)
    }
}

fn split_law_violations(n_min: usize, n_maj: usize, n_splits: usize, expect: (usize, usize)) -> Vec<String> {
    let mut labels: Vec<bool> = (0..n_min + n_maj).map(|i| i < n_min).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(n_maj as u64));
    let minority: BTreeSet<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let majority: BTreeSet<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let splits = balanced_splits(&labels, n_splits, 7).unwrap();
    let mut problems = Vec::new();
    let mut seen = BTreeSet::new();
    let mut sizes = BTreeSet::new();
    for s in &splits {
        let members: BTreeSet<usize> = s.members.iter().copied().collect();
        if !minority.is_subset(&members) {
            problems.push(format!("split {} misses minority records", s.split_id));
        }
        let part: BTreeSet<usize> = members.difference(&minority).copied().collect();
        sizes.insert(part.len());
        if !part.is_disjoint(&seen) {
            problems.push(format!("split {} reuses majority records", s.split_id));
        }
        seen.extend(part);
    }
    if seen != majority {
        problems.push("majority folds do not cover the majority class".into());
    }
    let sizes: BTreeSet<usize> = sizes.into_iter().map(|s| s + n_min).collect();
    let want: BTreeSet<usize> = [expect.0, expect.1].into();
    if !sizes.is_subset(&want) {
        problems.push(format!("({n_min},{n_maj}) split sizes {sizes:?}, expected {want:?}"));
    }
    problems
}

fn pipeline_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let mut problems = Vec::new();
    let mut grouped = 0;
    for _ in 0..10_000 {
        let (code, well_formed) = fuzz_code(&mut rng);
        match group_icd_code(&code) {
            Ok(family) => {
                grouped += 1;
                let again = group_icd_code(&family);
                if again.as_deref().ok() != Some(family.as_str()) || !code.starts_with(&family) || family.contains('.')
                {
                    problems.push(format!("grouping {code:?} -> {family:?} is not idempotent"));
                }
            }
            Err(_) if well_formed => problems.push(format!("well-formed code {code:?} rejected")),
            Err(_) => {}
        }
    }

    let records = synthetic_records(500, None, 302);
    for record in &records {
        let graph = build_pkg(record, &HspoSchema).unwrap();
        let text = serialize_ntriples(&graph).unwrap();
        let again = parse_ntriples(&text).and_then(|g| serialize_ntriples(&g));
        if again.as_deref().ok() != Some(text.as_str()) {
            problems.push(format!("N-Triples round trip of {} differs", record.admission_id));
        }
    }

    problems.extend(split_law_violations(50, 500, 10, (100, 100)));
    problems.extend(split_law_violations(1428, 14113, 10, (1428 + 1411, 1428 + 1412)));
    Outcome::new(
        problems.is_empty(),
        format!(
            "10000 fuzzed codes ({grouped} grouped), {} N-Triples round trips, split laws (50,500) and (1428,14113); {} violations{}",
            records.len(),
            problems.len(),
            problems.first().map_or_else(String::new, |p| format!(" (first: {p})"))
        ),
    )
}

// ---------------------------------------------------------------------------
// 4-6

struct PlantedCohort {
    admissions: usize,
    undirected: Vec<NumericGraph>,
    directed: Vec<NumericGraph>,
    table: TabularDataset,
    protocol: Protocol,
}

impl PlantedCohort {
    fn build() -> Self {
        let signal = PlantedSignal::on_frequent_codes(6, 6, 3.0, -6.0, 0.25);
        let config =
            CohortConfig { n_patients: 1500, planted_signal: Some(signal), seed: 3, ..CohortConfig::default() };
        // Whole patients, in generation order, until 2,000 admissions are reached.
        let mut raw = generate_cohort(&config).unwrap();
        let cut = raw
            .iter()
            .enumerate()
            .find(|(i, r)| *i >= PLANTED_ADMISSIONS && r.patient_id != raw[i - 1].patient_id)
            .map_or(raw.len(), |(i, _)| i);
        raw.truncate(cut);
        let admissions = raw.len();
        let records = preprocess(raw, &PreprocessConfig::default()).unwrap();
        let undirected = numeric_graphs(&records, GraphVersion::new(Version::V3, Direction::Undirected));
        let directed = numeric_graphs(&records, GraphVersion::new(Version::V3, Direction::Directed));
        let positives = records.iter().filter(|r| r.readmitted_within_window == Some(true)).count();
        let negatives = records.len() - positives;
        let n_splits = (negatives.max(positives) / negatives.min(positives)).max(3);
        let protocol = Protocol { n_splits, eval_splits: Some(3), k_folds: 5, seed: 3, ..Protocol::default() };
        PlantedCohort { admissions, undirected, directed, table: encode_tabular(&records), protocol }
    }

    fn mean_accuracy(&self, trainer: &dyn Trainer) -> f64 {
        let results = run_protocol(trainer, &self.protocol).unwrap();
        mean_std(results.iter().map(|r| r.accuracy)).0
    }

    fn gnn_accuracy(&self, graphs: &[NumericGraph], tag: Option<String>) -> f64 {
        let trainer =
            GnnTrainer { graphs, config: Default::default(), arch: Arch::Sage, variant: Variant::Linear, tag };
        self.mean_accuracy(&trainer)
    }
}

fn learnability(cohort: &PlantedCohort) -> (Outcome, f64) {
    let started = Instant::now();
    let gnn = cohort.gnn_accuracy(&cohort.undirected, None);
    let nb = cohort.mean_accuracy(&BaselineTrainer { data: &cohort.table, kind: BaselineKind::GaussianNb });
    let knn = cohort.mean_accuracy(&BaselineTrainer { data: &cohort.table, kind: BaselineKind::Knn });
    let elapsed = started.elapsed().as_secs_f64();
    let pass = gnn >= LEARNABILITY_MIN_ACCURACY
        && gnn >= nb + LEARNABILITY_MARGIN
        && gnn >= knn + LEARNABILITY_MARGIN
        && elapsed < LEARNABILITY_BUDGET_S;
    let detail = format!(
        "{} admissions, {} processed; PKGSage-variant1 undirected V3 {gnn:.2}% (>= {LEARNABILITY_MIN_ACCURACY}), NB {nb:.2}%, KNN {knn:.2}% (margin >= {LEARNABILITY_MARGIN}), {elapsed:.0}s < {LEARNABILITY_BUDGET_S}s",
        cohort.admissions,
        cohort.undirected.len()
    );
    (Outcome::new(pass, detail), gnn)
}

fn direction_gap(cohort: &PlantedCohort, undirected: f64) -> Outcome {
    let directed = cohort.gnn_accuracy(&cohort.directed, None);
    Outcome::new(
        undirected - directed >= DIRECTION_GAP,
        format!(
            "undirected V3 {undirected:.2}%, directed V3 {directed:.2}%, gap {:.2} (needs >= {DIRECTION_GAP})",
            undirected - directed
        ),
    )
}

fn ablation_ordering(cohort: &PlantedCohort) -> Outcome {
    let accuracy_without = |facet: AblationFacet| {
        let set = BTreeSet::from([facet]);
        let graphs: Vec<NumericGraph> = cohort.undirected.iter().map(|g| ablate(g, &set)).collect();
        cohort.gnn_accuracy(&graphs, Some(format!("-{facet}")))
    };
    let social = accuracy_without(AblationFacet::Social);
    let diseases = accuracy_without(AblationFacet::Diseases);
    Outcome::new(
        social - diseases >= ABLATION_MARGIN,
        format!(
            "without social {social:.2}%, without diseases {diseases:.2}%, difference {:.2} (needs >= {ABLATION_MARGIN})",
            social - diseases
        ),
    )
}

// ---------------------------------------------------------------------------
// 7

const CHAIN_CONFIG: &str = r#"{
  "cohort": { "n_patients": 150 },
  "train": { "epochs": 2 },
  "protocol": { "n_splits": 2, "eval_splits": 1, "k_folds": 3, "record_runtime": false }
}"#;

fn csv_hashes(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, hex::encode(Sha256::digest(fs::read(&path).unwrap())));
            }
        }
    }
    out
}

fn run_chain(dir: &Path) -> Result<BTreeMap<String, String>, String> {
    let config = dir.join("config.json");
    fs::write(&config, CHAIN_CONFIG).map_err(|e| e.to_string())?;
    for stage in ["run", "ablate", "report"] {
        let out = Command::new(env!("CARGO_BIN_EXE_pkgraph"))
            .arg("--config")
            .arg(&config)
            .args(["--seed", "17", stage])
            .env("RUST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{stage} failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(csv_hashes(&dir.join("work/results")))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    match (run_chain(a.path()), run_chain(b.path())) {
        (Ok(x), Ok(y)) => {
            let differing = x.iter().filter(|(k, v)| y.get(*k) != Some(v)).count()
                + y.keys().filter(|k| !x.contains_key(*k)).count();
            Outcome::new(
                differing == 0 && !x.is_empty(),
                format!("{} results CSVs per run, {differing} differ in SHA-256", x.len()),
            )
        }
        (Err(e), _) | (_, Err(e)) => Outcome::new(false, e),
    }
}

// ---------------------------------------------------------------------------
// 8

fn missingness_fidelity() -> Outcome {
    let profile = MissingnessProfile::default();
    let mut worst = (0.0f64, String::new());
    let mut gender_missing = 0;
    for seed in [801, 802, 803] {
        let mut n_patients = 5000;
        let records = loop {
            let config = CohortConfig { n_patients, seed, ..CohortConfig::default() };
            let records = generate_cohort(&config).unwrap();
            if records.len() >= 10_000 {
                break records.into_iter().take(10_000).collect::<Vec<_>>();
            }
            n_patients += n_patients / 2;
        };
        gender_missing += records.iter().filter(|r| r.gender.is_none()).count();
        for facet in Facet::ALL {
            let rate = records.iter().filter(|r| facet.is_missing(r)).count() as f64 / records.len() as f64;
            let dev = (rate - profile.rate(facet)).abs();
            if dev >= worst.0 {
                worst = (dev, format!("{facet} {:.4} vs {:.4}", rate, profile.rate(facet)));
            }
        }
    }
    Outcome::new(
        worst.0 <= MISSINGNESS_TOLERANCE && gender_missing == 0,
        format!(
            "3 cohorts of 10000 records, max deviation {:.4} ({}) <= {MISSINGNESS_TOLERANCE}, missing gender {gender_missing}",
            worst.0, worst.1
        ),
    )
}
