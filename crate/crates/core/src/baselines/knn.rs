use super::TabularDataset;

pub const DEFAULT_K: usize = 5;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Majority vote of the `k` nearest training rows (Euclidean); equal votes go
/// to the positive class. Distance ties keep the earlier training row.
pub fn knn_predict(train: &TabularDataset, query: &[f64], k: usize) -> bool {
    knn_score(train, query, k) >= 0.5
}

/// Fraction of positive labels among the `k` nearest training rows.
pub fn knn_score(train: &TabularDataset, query: &[f64], k: usize) -> f64 {
    let mut dist: Vec<(f64, usize)> =
        train.features.iter().enumerate().map(|(i, row)| (squared_distance(row, query), i)).collect();
    let k = k.min(dist.len()).max(1);
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let positives = dist[..k].iter().filter(|(_, i)| train.labels[*i]).count();
    positives as f64 / k as f64
}
