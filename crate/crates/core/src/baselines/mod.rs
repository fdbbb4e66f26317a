//! Classical classifiers on tabular encodings of the processed records.

mod encode;
mod knn;
mod nb;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use encode::{encode_tabular, Column, ColumnKind, TabularDataset};
pub use knn::{knn_predict, knn_score, DEFAULT_K};
pub use nb::{GaussianNb, VARIANCE_FLOOR};
pub use svm::LinearSvm;
pub use tree::{AdaBoost, DecisionTree, Node, MAX_DEPTH, MIN_LEAF, N_STUMPS};

use crate::{Error, Result};

fn require_both_classes(data: &TabularDataset) -> Result<()> {
    let positives = data.labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::validation(format!(
            "classifier needs both classes, got {positives} positive of {}",
            data.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaselineKind {
    Knn,
    GaussianNb,
    DecisionTree,
    AdaBoost,
    LinearSvm,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Knn,
        BaselineKind::GaussianNb,
        BaselineKind::DecisionTree,
        BaselineKind::AdaBoost,
        BaselineKind::LinearSvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Knn => "KNN",
            BaselineKind::GaussianNb => "NB",
            BaselineKind::DecisionTree => "DT",
            BaselineKind::AdaBoost => "AdaBoost",
            BaselineKind::LinearSvm => "LinearSVM",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown baseline {s:?}")))
    }
}

/// A fitted baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaselineModel {
    Knn { train: TabularDataset, k: usize },
    GaussianNb(GaussianNb),
    DecisionTree(DecisionTree),
    AdaBoost(AdaBoost),
    LinearSvm(LinearSvm),
}

impl BaselineModel {
    pub fn fit(kind: BaselineKind, data: &TabularDataset) -> Result<Self> {
        Ok(match kind {
            BaselineKind::Knn => {
                require_both_classes(data)?;
                BaselineModel::Knn { train: data.clone(), k: DEFAULT_K }
            }
            BaselineKind::GaussianNb => BaselineModel::GaussianNb(GaussianNb::fit(data)?),
            BaselineKind::DecisionTree => BaselineModel::DecisionTree(DecisionTree::fit(data)?),
            BaselineKind::AdaBoost => BaselineModel::AdaBoost(AdaBoost::fit(data)?),
            BaselineKind::LinearSvm => BaselineModel::LinearSvm(LinearSvm::fit(data)?),
        })
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        match self {
            BaselineModel::Knn { train, k } => knn_predict(train, row, *k),
            BaselineModel::GaussianNb(m) => m.predict(row),
            BaselineModel::DecisionTree(m) => m.predict(row),
            BaselineModel::AdaBoost(m) => m.predict(row),
            BaselineModel::LinearSvm(m) => m.predict(row),
        }
    }

    /// Monotone confidence of the positive class; the SVM returns its raw margin.
    pub fn score(&self, row: &[f64]) -> f64 {
        match self {
            BaselineModel::Knn { train, k } => knn_score(train, row, *k),
            BaselineModel::GaussianNb(m) => m.score(row),
            BaselineModel::DecisionTree(m) => m.score(row),
            BaselineModel::AdaBoost(m) => m.score(row),
            BaselineModel::LinearSvm(m) => m.decision(row),
        }
    }
}
