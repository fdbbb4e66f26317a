use serde::{Deserialize, Serialize};

use super::{require_both_classes, TabularDataset};
use crate::Result;

pub const EPOCHS: usize = 200;
pub const LEARNING_RATE: f64 = 0.01;
pub const L2: f64 = 1e-4;

/// Linear classifier trained on the regularised hinge loss by per-example
/// sub-gradient steps in record order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn fit(data: &TabularDataset) -> Result<Self> {
        require_both_classes(data)?;
        let mut weights = vec![0.0; data.n_features()];
        let mut bias = 0.0;
        for _ in 0..EPOCHS {
            for (row, &label) in data.features.iter().zip(&data.labels) {
                let y = if label { 1.0 } else { -1.0 };
                let margin = y * (dot(&weights, row) + bias);
                for (w, x) in weights.iter_mut().zip(row) {
                    let hinge = if margin < 1.0 { -y * x } else { 0.0 };
                    *w -= LEARNING_RATE * (L2 * *w + hinge);
                }
                if margin < 1.0 {
                    bias += LEARNING_RATE * y;
                }
            }
        }
        Ok(LinearSvm { weights, bias })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.decision(row) >= 0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
