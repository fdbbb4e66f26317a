use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::protocol::{run_protocol, ExperimentResult, GnnTrainer, Protocol};
use super::report::mean_std;
use crate::gnn::{Arch, TrainConfig, Variant};
use crate::graphx::{ablate, AblationFacet, NumericGraph};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub excluded: Vec<AblationFacet>,
    pub accuracy: f64,
    pub f1: f64,
    /// Row minus the unablated row, in points.
    pub delta_accuracy: f64,
    pub delta_f1: f64,
    pub results: Vec<ExperimentResult>,
}

impl AblationRow {
    pub fn name(&self) -> String {
        if self.excluded.is_empty() {
            "none".to_string()
        } else {
            self.excluded.iter().map(|f| f.name()).collect::<Vec<_>>().join("+")
        }
    }
}

/// The five single-facet exclusions followed by the ten pairs.
pub fn table_facet_sets() -> Vec<BTreeSet<AblationFacet>> {
    let all = AblationFacet::ALL;
    let mut sets: Vec<BTreeSet<AblationFacet>> = all.iter().map(|&f| BTreeSet::from([f])).collect();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            sets.push(BTreeSet::from([all[i], all[j]]));
        }
    }
    sets
}

/// Runs the protocol on the unablated graphs and on every facet set; the first
/// row is the unablated baseline.
pub fn ablation_suite(
    graphs: &[NumericGraph],
    config: &TrainConfig,
    arch: Arch,
    variant: Variant,
    facet_sets: &[BTreeSet<AblationFacet>],
    protocol: &Protocol,
) -> Result<Vec<AblationRow>> {
    let mut sets = vec![BTreeSet::new()];
    sets.extend(facet_sets.iter().cloned());
    let mut rows: Vec<AblationRow> = Vec::with_capacity(sets.len());
    for set in sets {
        let ablated: Vec<NumericGraph> = graphs.iter().map(|g| ablate(g, &set)).collect();
        let name = if set.is_empty() {
            None
        } else {
            Some(format!("-{}", set.iter().map(|f| f.name()).collect::<Vec<_>>().join("-")))
        };
        let trainer = GnnTrainer { graphs: &ablated, config: config.clone(), arch, variant, tag: name };
        let results = run_protocol(&trainer, protocol)?;
        let accuracy = mean_std(results.iter().map(|r| r.accuracy)).0;
        let f1 = mean_std(results.iter().map(|r| r.f1)).0;
        let (delta_accuracy, delta_f1) = rows.first().map_or((0.0, 0.0), |b| (accuracy - b.accuracy, f1 - b.f1));
        rows.push(AblationRow { excluded: set.into_iter().collect(), accuracy, f1, delta_accuracy, delta_f1, results });
    }
    Ok(rows)
}
