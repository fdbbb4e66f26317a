use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::metrics;
use super::splits::{balanced_splits, derive_seed, stratified_folds, BalancedSplit, Fold};
use crate::baselines::{BaselineKind, BaselineModel, TabularDataset};
use crate::gnn::{predict, train_with_validation, Arch, TrainConfig, Variant};
use crate::graphx::NumericGraph;
use crate::{Error, Result};

/// One (configuration, split, fold) evaluation; metrics in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: String,
    pub version: String,
    pub direction: String,
    pub split: usize,
    pub fold: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub f1: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protocol {
    pub n_splits: usize,
    /// Evaluate only the first this many splits; all when absent.
    pub eval_splits: Option<usize>,
    pub k_folds: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    /// Write measured wall time; when false `runtime_s` is 0 so results are reproducible byte for byte.
    pub record_runtime: bool,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            n_splits: 10,
            eval_splits: None,
            k_folds: 5,
            validation_fraction: 0.15,
            seed: 0,
            record_runtime: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLabel {
    pub config: String,
    pub version: String,
    pub direction: String,
}

/// A model family evaluated by the protocol on a fixed labelled dataset.
pub trait Trainer: Sync {
    fn label(&self) -> RunLabel;

    fn labels(&self) -> Vec<bool>;

    /// Fits on the fold's training (and, if wanted, validation) records and
    /// returns predictions for its test records, in order.
    fn fit_predict(&self, fold: &Fold, seed: u64) -> Result<Vec<bool>>;
}

pub struct GnnTrainer<'a> {
    pub graphs: &'a [NumericGraph],
    pub config: TrainConfig,
    pub arch: Arch,
    pub variant: Variant,
    /// Appended to the configuration name, e.g. for ablations.
    pub tag: Option<String>,
}

impl Trainer for GnnTrainer<'_> {
    fn label(&self) -> RunLabel {
        let first = self.graphs.first();
        let mut config = format!("{}-{}", self.arch.name(), self.variant.name());
        if let Some(tag) = &self.tag {
            config = format!("{config} {tag}");
        }
        RunLabel {
            config,
            version: first.map_or_else(String::new, |g| g.version.to_string()),
            direction: first.map_or_else(String::new, |g| g.direction.to_string()),
        }
    }

    fn labels(&self) -> Vec<bool> {
        self.graphs.iter().map(|g| g.label == 1).collect()
    }

    fn fit_predict(&self, fold: &Fold, seed: u64) -> Result<Vec<bool>> {
        let pick = |idx: &[usize]| -> Vec<&NumericGraph> { idx.iter().map(|&i| &self.graphs[i]).collect() };
        let config = TrainConfig { seed, ..self.config.clone() };
        let outcome =
            train_with_validation(&pick(&fold.train), &pick(&fold.validation), &config, self.arch, self.variant)?;
        Ok(predict(&outcome.params, &pick(&fold.test))?.into_iter().map(|p| p >= 0.5).collect())
    }
}

/// Classical baselines have no model selection and fit on training plus validation records.
pub struct BaselineTrainer<'a> {
    pub data: &'a TabularDataset,
    pub kind: BaselineKind,
}

impl Trainer for BaselineTrainer<'_> {
    fn label(&self) -> RunLabel {
        RunLabel { config: self.kind.name().to_string(), version: "tabular".into(), direction: "none".into() }
    }

    fn labels(&self) -> Vec<bool> {
        self.data.labels.clone()
    }

    fn fit_predict(&self, fold: &Fold, _seed: u64) -> Result<Vec<bool>> {
        let mut fit_idx = fold.train.clone();
        fit_idx.extend_from_slice(&fold.validation);
        let model = BaselineModel::fit(self.kind, &self.data.subset(&fit_idx))?;
        Ok(fold.test.iter().map(|&i| model.predict(&self.data.features[i])).collect())
    }
}

fn run_fold(trainer: &dyn Trainer, labels: &[bool], fold: &Fold, protocol: &Protocol) -> Result<ExperimentResult> {
    let started = Instant::now();
    let run_seed = derive_seed(protocol.seed, &[fold.split_id as u64, fold.fold_id as u64, 2]);
    let predicted = trainer.fit_predict(fold, run_seed)?;
    let truth: Vec<bool> = fold.test.iter().map(|&i| labels[i]).collect();
    let m = metrics(&predicted, &truth)?;
    let label = trainer.label();
    log::info!(
        "{} {} {} split {} fold {}: acc {:.2} f1 {:.2}",
        label.config,
        label.version,
        label.direction,
        fold.split_id,
        fold.fold_id,
        m.accuracy,
        m.f1
    );
    Ok(ExperimentResult {
        config: label.config,
        version: label.version,
        direction: label.direction,
        split: fold.split_id,
        fold: fold.fold_id,
        seed: protocol.seed,
        accuracy: m.accuracy,
        f1: m.f1,
        runtime_s: if protocol.record_runtime { started.elapsed().as_secs_f64() } else { 0.0 },
    })
}

/// Stratified k-fold evaluation of one balanced split.
pub fn cross_validate(
    split: &BalancedSplit,
    trainer: &dyn Trainer,
    protocol: &Protocol,
) -> Result<Vec<ExperimentResult>> {
    let labels = trainer.labels();
    let folds = stratified_folds(split, &labels, protocol.k_folds, protocol.validation_fraction, protocol.seed)?;
    folds.par_iter().map(|f| run_fold(trainer, &labels, f, protocol)).collect()
}

/// Every fold of every evaluated split, sorted by (split, fold).
pub fn protocol_folds(labels: &[bool], protocol: &Protocol) -> Result<Vec<Fold>> {
    let splits = balanced_splits(labels, protocol.n_splits, protocol.seed)?;
    let n_eval = protocol.eval_splits.unwrap_or(splits.len());
    if n_eval == 0 || n_eval > splits.len() {
        return Err(Error::config(format!("eval_splits must lie in 1..={}, got {n_eval}", splits.len())));
    }
    let mut folds = Vec::new();
    for split in &splits[..n_eval] {
        folds.extend(stratified_folds(split, labels, protocol.k_folds, protocol.validation_fraction, protocol.seed)?);
    }
    Ok(folds)
}

/// Full protocol for one trainer: balanced splits, then k folds per split.
pub fn run_protocol(trainer: &dyn Trainer, protocol: &Protocol) -> Result<Vec<ExperimentResult>> {
    let labels = trainer.labels();
    let folds = protocol_folds(&labels, protocol)?;
    let mut results: Vec<ExperimentResult> =
        folds.par_iter().map(|f| run_fold(trainer, &labels, f, protocol)).collect::<Result<_>>()?;
    results.sort_by_key(|r| (r.split, r.fold));
    Ok(results)
}
