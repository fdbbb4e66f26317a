use serde::{Deserialize, Serialize};

use super::{require_both_classes, TabularDataset};
use crate::Result;

pub const MAX_DEPTH: usize = 12;
pub const MIN_LEAF: usize = 2;
pub const N_STUMPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Weighted fraction of positives reaching the leaf.
    Leaf {
        positive: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// CART classifier with Gini impurity; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    data: &'a TabularDataset,
    weights: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
}

impl Grower<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let total: f64 = rows.iter().map(|&i| self.weights[i]).sum();
        let pos: f64 = rows.iter().filter(|&&i| self.data.labels[i]).map(|&i| self.weights[i]).sum();
        Node::Leaf { positive: if total > 0.0 { pos / total } else { 0.5 } }
    }

    fn grow(&self, rows: &[usize], depth: usize) -> Node {
        let total: f64 = rows.iter().map(|&i| self.weights[i]).sum();
        let pos: f64 = rows.iter().filter(|&&i| self.data.labels[i]).map(|&i| self.weights[i]).sum();
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf || pos <= 0.0 || pos >= total {
            return self.leaf(rows);
        }
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = rows.to_vec();
        for feature in 0..self.data.n_features() {
            order.sort_by(|&a, &b| self.data.features[a][feature].total_cmp(&self.data.features[b][feature]));
            let (mut lw, mut lp) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                lw += self.weights[i];
                if self.data.labels[i] {
                    lp += self.weights[i];
                }
                let (x, next) = (self.data.features[i][feature], self.data.features[order[k + 1]][feature]);
                if x == next || k + 1 < self.min_leaf || order.len() - k - 1 < self.min_leaf {
                    continue;
                }
                let impurity = gini(lp, lw) * lw + gini(pos - lp, total - lw) * (total - lw);
                if best.is_none_or(|(b, _, _)| impurity < b - 1e-12) {
                    best = Some((impurity, feature, 0.5 * (x + next)));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(rows);
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.data.features[i][feature] <= threshold);
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.grow(&left, depth + 1)),
            right: Box::new(self.grow(&right, depth + 1)),
        }
    }
}

impl DecisionTree {
    pub fn fit(data: &TabularDataset) -> Result<Self> {
        require_both_classes(data)?;
        let weights = vec![1.0; data.len()];
        Ok(Self::fit_weighted(data, &weights, MAX_DEPTH, MIN_LEAF))
    }

    pub fn fit_weighted(data: &TabularDataset, weights: &[f64], max_depth: usize, min_leaf: usize) -> Self {
        let rows: Vec<usize> = (0..data.len()).collect();
        let grower = Grower { data, weights, max_depth, min_leaf };
        DecisionTree { root: grower.grow(&rows, 0) }
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { positive } => return *positive,
                Node::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.score(row) >= 0.5
    }
}

/// Discrete two-class AdaBoost over depth-1 trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<(f64, DecisionTree)>,
}

impl AdaBoost {
    pub fn fit(data: &TabularDataset) -> Result<Self> {
        Self::fit_with(data, N_STUMPS)
    }

    pub fn fit_with(data: &TabularDataset, n_stumps: usize) -> Result<Self> {
        require_both_classes(data)?;
        let n = data.len();
        let mut weights = vec![1.0 / n as f64; n];
        let mut stumps = Vec::with_capacity(n_stumps);
        for _ in 0..n_stumps {
            let stump = DecisionTree::fit_weighted(data, &weights, 1, 1);
            let wrong: Vec<bool> =
                data.features.iter().zip(&data.labels).map(|(row, &y)| stump.predict(row) != y).collect();
            let error: f64 = weights.iter().zip(&wrong).filter(|(_, &w)| w).map(|(w, _)| w).sum();
            if error >= 0.5 {
                if stumps.is_empty() {
                    stumps.push((1.0, stump));
                }
                break;
            }
            let error = error.max(1e-10);
            let alpha = 0.5 * ((1.0 - error) / error).ln();
            for (w, &miss) in weights.iter_mut().zip(&wrong) {
                *w *= if miss { alpha.exp() } else { (-alpha).exp() };
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            stumps.push((alpha, stump));
            if error <= 1e-10 {
                break;
            }
        }
        Ok(AdaBoost { stumps })
    }

    /// Weighted vote in [-1, 1].
    pub fn margin(&self, row: &[f64]) -> f64 {
        let total: f64 = self.stumps.iter().map(|(a, _)| a).sum();
        let vote: f64 = self.stumps.iter().map(|(a, s)| if s.predict(row) { *a } else { -a }).sum();
        vote / total
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        0.5 * (self.margin(row) + 1.0)
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.margin(row) >= 0.0
    }
}
