use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gnn::stratified_holdout;
use crate::{Error, Result};

/// All minority records plus one fold of the majority class, as dataset indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedSplit {
    pub split_id: usize,
    /// Sorted indices into the labelled dataset.
    pub members: Vec<usize>,
}

/// Shuffles the majority class and deals it into `n_splits` folds whose sizes
/// differ by at most one; every split joins one fold with the whole minority.
/// When both classes have the same size the negatives are treated as majority.
pub fn balanced_splits(labels: &[bool], n_splits: usize, seed: u64) -> Result<Vec<BalancedSplit>> {
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::validation("balanced splits need both classes"));
    }
    let (minority, mut majority) =
        if positives.len() > negatives.len() { (negatives, positives) } else { (positives, negatives) };
    if n_splits == 0 || n_splits > majority.len() {
        return Err(Error::config(format!("cannot cut {} majority records into {n_splits} splits", majority.len())));
    }
    majority.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (majority.len() / n_splits, majority.len() % n_splits);
    let mut start = 0;
    Ok((0..n_splits)
        .map(|split_id| {
            let size = base + usize::from(split_id < extra);
            let mut members = minority.clone();
            members.extend_from_slice(&majority[start..start + size]);
            start += size;
            members.sort_unstable();
            BalancedSplit { split_id, members }
        })
        .collect())
}

/// Dataset indices of one cross-validation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub split_id: usize,
    pub fold_id: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Deterministic 64-bit mix of a seed with run coordinates.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut x = seed;
    for &p in parts {
        x ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(x << 6).wrapping_add(x >> 2);
        // splitmix64 finaliser
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
    }
    x
}

/// Stratified `k`-fold partition of a split. Fold membership depends only on the
/// split and `seed`; each training part then loses `validation_fraction` of every
/// class to a validation set.
pub fn stratified_folds(
    split: &BalancedSplit,
    labels: &[bool],
    k: usize,
    validation_fraction: f64,
    seed: u64,
) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::config(format!("cross-validation needs k >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[split.split_id as u64]));
    let mut assignment = vec![Vec::new(); k];
    for class in [false, true] {
        let mut idx: Vec<usize> = split.members.iter().copied().filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::validation(format!(
                "split {} has {} records of class {} for {k} folds; a fold would miss that class",
                split.split_id,
                idx.len(),
                u8::from(class)
            )));
        }
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            assignment[j % k].push(i);
        }
    }
    Ok((0..k)
        .map(|fold_id| {
            let mut test = assignment[fold_id].clone();
            test.sort_unstable();
            let rest: Vec<usize> =
                (0..k).filter(|&f| f != fold_id).flat_map(|f| assignment[f].iter().copied()).collect();
            let rest_labels: Vec<bool> = rest.iter().map(|&i| labels[i]).collect();
            let (tr, va) = stratified_holdout(
                &rest_labels,
                validation_fraction,
                derive_seed(seed, &[split.split_id as u64, fold_id as u64, 1]),
            );
            let mut train: Vec<usize> = tr.into_iter().map(|j| rest[j]).collect();
            let mut validation: Vec<usize> = va.into_iter().map(|j| rest[j]).collect();
            train.sort_unstable();
            validation.sort_unstable();
            Fold { split_id: split.split_id, fold_id, train, validation, test }
        })
        .collect())
}
