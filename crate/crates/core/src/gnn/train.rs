use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{backward_accumulate, model_forward, Arch, ModelParams, ModelSpec, Variant};
use crate::graphx::NumericGraph;
use crate::harness::metrics::{metrics, Metrics};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub n_bases: usize,
    pub validation_fraction: f64,
    pub hidden: [usize; 2],
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 100,
            batch_size: 32,
            n_bases: 3,
            validation_fraction: 0.15,
            hidden: [64, 32],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.n_bases == 0 || self.hidden.contains(&0) {
            return Err(Error::config("batch_size, n_bases and hidden sizes must be positive"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::config(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation F1 (initialisation if no epoch ran).
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch the parameters come from; 0 for the initialisation.
    pub best_epoch: usize,
}

/// Splits indices per class, holding out `round(fraction · count)` of each class
/// (at least one, never all) when the class has two or more members.
pub fn stratified_holdout(labels: &[bool], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_held =
            if idx.len() < 2 { 0 } else { ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1) };
        held.extend_from_slice(&idx[..n_held]);
        train.extend_from_slice(&idx[n_held..]);
    }
    train.sort_unstable();
    held.sort_unstable();
    (train, held)
}

fn require_both_classes(graphs: &[&NumericGraph], min_per_class: usize, what: &str) -> Result<()> {
    let positives = graphs.iter().filter(|g| g.label == 1).count();
    let negatives = graphs.len() - positives;
    if positives < min_per_class || negatives < min_per_class {
        return Err(Error::validation(format!(
            "{what} needs at least {min_per_class} example(s) per class, got {positives} positive and {negatives} negative"
        )));
    }
    Ok(())
}

/// Carves a stratified validation set from `graphs`, then trains.
pub fn train(graphs: &[NumericGraph], config: &TrainConfig, arch: Arch, variant: Variant) -> Result<TrainOutcome> {
    config.validate()?;
    let all: Vec<&NumericGraph> = graphs.iter().collect();
    require_both_classes(&all, 2, "training set")?;
    let labels: Vec<bool> = graphs.iter().map(|g| g.label == 1).collect();
    let (train_idx, val_idx) = stratified_holdout(&labels, config.validation_fraction, config.seed ^ 0x7661_6c69);
    let train_set: Vec<&NumericGraph> = train_idx.iter().map(|&i| &graphs[i]).collect();
    let val_set: Vec<&NumericGraph> = val_idx.iter().map(|&i| &graphs[i]).collect();
    train_with_validation(&train_set, &val_set, config, arch, variant)
}

/// Probability for every graph.
pub fn predict(params: &ModelParams, graphs: &[&NumericGraph]) -> Result<Vec<f64>> {
    graphs.iter().map(|g| model_forward(g, params)).collect()
}

pub fn evaluate(params: &ModelParams, graphs: &[&NumericGraph]) -> Result<Metrics> {
    let predicted: Vec<bool> = predict(params, graphs)?.into_iter().map(|p| p >= 0.5).collect();
    let labels: Vec<bool> = graphs.iter().map(|g| g.label == 1).collect();
    metrics(&predicted, &labels)
}

pub fn model_spec(graphs: &[&NumericGraph], config: &TrainConfig, arch: Arch, variant: Variant) -> Result<ModelSpec> {
    let first = graphs.first().ok_or_else(|| Error::contract("no graphs to train on"))?;
    let (dim, relations, gv) = (first.vocab_size, first.n_relations(), first.graph_version());
    if let Some(g) = graphs.iter().find(|g| g.vocab_size != dim || g.graph_version() != gv) {
        return Err(Error::validation(format!("graph {} differs in version or feature width from {}", g.id, first.id)));
    }
    let mut spec = ModelSpec::new(arch, variant, dim, relations);
    spec.hidden = config.hidden;
    spec.n_bases = config.n_bases;
    Ok(spec)
}

/// Mini-batch Adam on `train_set`, keeping the parameters with the best F1 on `val_set`.
pub fn train_with_validation(
    train_set: &[&NumericGraph],
    val_set: &[&NumericGraph],
    config: &TrainConfig,
    arch: Arch,
    variant: Variant,
) -> Result<TrainOutcome> {
    config.validate()?;
    require_both_classes(train_set, 1, "training set")?;
    if val_set.is_empty() {
        return Err(Error::validation("validation set is empty"));
    }
    let mut all = train_set.to_vec();
    all.extend_from_slice(val_set);
    let spec = model_spec(&all, config, arch, variant)?;

    let mut params = ModelParams::init(spec, config.seed)?;
    let mut best = params.clone();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    let mut state = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grads = params.zeros_like();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.scale(0.0);
            let weight = 1.0 / batch.len() as f64;
            for &i in batch {
                let g = train_set[i];
                loss_sum += backward_accumulate(g, &params, g.label == 1, weight, &mut grads)?;
            }
            if grads.tensors().iter().any(|(_, _, d)| d.iter().any(|v| !v.is_finite())) {
                return Err(Error::Numeric { layer: "backward".into(), message: "non-finite gradient".into() });
            }
            adam_step(&mut params, &grads, &mut state, &adam);
        }
        let val = evaluate(&params, val_set)?;
        let record =
            EpochRecord { epoch, train_loss: loss_sum / train_set.len() as f64, val_acc: val.accuracy, val_f1: val.f1 };
        log::trace!("{} epoch {epoch}: {record:?}", spec.tag());
        if val.f1 > best_f1 {
            best_f1 = val.f1;
            best = params.clone();
            best_epoch = epoch;
        }
        history.push(record);
    }
    Ok(TrainOutcome { params: best, history, best_epoch })
}

pub fn write_history_csv<W: Write>(mut out: W, history: &[EpochRecord]) -> Result<()> {
    writeln!(out, "epoch,train_loss,val_acc,val_f1")?;
    for r in history {
        writeln!(out, "{},{},{},{}", r.epoch, r.train_loss, r.val_acc, r.val_f1)?;
    }
    Ok(())
}
