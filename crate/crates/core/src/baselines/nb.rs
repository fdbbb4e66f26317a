use serde::{Deserialize, Serialize};

use super::{require_both_classes, TabularDataset};
use crate::Result;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Index 0 is the negative class, 1 the positive class.
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub variance: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(data: &TabularDataset) -> Result<Self> {
        require_both_classes(data)?;
        let d = data.n_features();
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        let mut variance = [vec![0.0; d], vec![0.0; d]];
        let mut count = [0usize; 2];
        for (row, &y) in data.features.iter().zip(&data.labels) {
            let c = usize::from(y);
            count[c] += 1;
            for (m, x) in mean[c].iter_mut().zip(row) {
                *m += x;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
        }
        for (row, &y) in data.features.iter().zip(&data.labels) {
            let c = usize::from(y);
            for ((v, m), x) in variance[c].iter_mut().zip(&mean[c]).zip(row) {
                *v += (x - m) * (x - m);
            }
        }
        for c in 0..2 {
            variance[c].iter_mut().for_each(|v| *v = (*v / count[c] as f64).max(VARIANCE_FLOOR));
        }
        let n = data.len() as f64;
        Ok(GaussianNb { log_prior: [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()], mean, variance })
    }

    pub fn log_joint(&self, row: &[f64], class: usize) -> f64 {
        let mut total = self.log_prior[class];
        for ((x, m), v) in row.iter().zip(&self.mean[class]).zip(&self.variance[class]) {
            total -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v);
        }
        total
    }

    /// Posterior probability of the positive class.
    pub fn score(&self, row: &[f64]) -> f64 {
        let diff = self.log_joint(row, 0) - self.log_joint(row, 1);
        1.0 / (1.0 + diff.exp())
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.log_joint(row, 1) >= self.log_joint(row, 0)
    }
}
