#![allow(dead_code)]

use pkgraph::cohortgen::{generate_cohort, CohortConfig, PlantedSignal};
use pkgraph::graphx::{build_vocabulary, to_numeric, GraphVersion, NumericGraph};
use pkgraph::pkg::{build_pkg, HspoSchema, TripleGraph};
use pkgraph::preprocess::{preprocess, PreprocessConfig};
use pkgraph::AdmissionRecord;

pub fn cohort(n_patients: usize, signal: Option<PlantedSignal>, seed: u64) -> Vec<AdmissionRecord> {
    let config = CohortConfig { n_patients, planted_signal: signal, seed, ..CohortConfig::default() };
    preprocess(generate_cohort(&config).unwrap(), &PreprocessConfig::default()).unwrap()
}

pub fn triple_graphs(records: &[AdmissionRecord]) -> Vec<TripleGraph> {
    records.iter().map(|r| build_pkg(r, &HspoSchema).unwrap()).collect()
}

pub fn numeric(records: &[AdmissionRecord], gv: GraphVersion) -> Vec<NumericGraph> {
    let graphs = triple_graphs(records);
    let vocab = build_vocabulary(&graphs).unwrap();
    graphs.iter().map(|g| to_numeric(g, gv, &vocab).unwrap()).collect()
}
