use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Accuracy and positive-class F1, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
}

pub fn metrics(predictions: &[bool], labels: &[bool]) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::contract(format!("{} predictions for {} labels", predictions.len(), labels.len())));
    }
    if predictions.is_empty() {
        return Err(Error::contract("metrics of an empty set"));
    }
    let (mut tp, mut fp, mut fn_, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
        if p == y {
            correct += 1;
        }
    }
    let accuracy = 100.0 * correct as f64 / labels.len() as f64;
    // 2PR/(P+R) simplifies to 2TP/(2TP+FP+FN); zero when there is no true positive.
    let f1 = if tp == 0 { 0.0 } else { 100.0 * 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
    Ok(Metrics { accuracy, f1 })
}
