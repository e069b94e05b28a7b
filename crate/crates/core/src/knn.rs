//! k-NN classification of feature samples with per-dimension min-max
//! normalization fit on the training data. The two feature coordinates
//! differ by orders of magnitude, so an unnormalized euclidean metric would
//! be dominated by one axis.
//!
//! Tie rules are fixed for bit-exact determinism: equal votes go to the
//! class of the nearest member among the tied classes, equal distances to
//! the earlier training point.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::{FeatureSample, TxLabel};

#[derive(Debug, Clone)]
pub struct KnnModel {
    points: Vec<(TxLabel, [f64; 2])>,
    mins: [f64; 2],
    ranges: [f64; 2],
}

impl KnnModel {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Min-max map fit on the training set; a degenerate dimension
    /// normalizes to zero.
    fn normalize(&self, coords: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for d in 0..2 {
            if self.ranges[d] > 0.0 {
                out[d] = (coords[d] - self.mins[d]) / self.ranges[d];
            }
        }
        out
    }
}

/// Per-k accuracy with its confusion matrix (rows true class, columns
/// predicted, both in `labels` order).
#[derive(Debug, Clone)]
pub struct KAccuracy {
    pub k: usize,
    pub rate: f64,
    pub confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub labels: Vec<TxLabel>,
    pub entries: Vec<KAccuracy>,
}

impl AccuracyReport {
    pub fn rate_at(&self, k: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.rate)
    }

    pub fn best_rate(&self) -> f64 {
        self.entries.iter().map(|e| e.rate).fold(0.0, f64::max)
    }
}

/// Stores the training points and fits the per-dimension normalization.
pub fn fit(train: &[FeatureSample]) -> Result<KnnModel> {
    if train.is_empty() {
        return Err(Error::InvalidParameter("empty training set".into()));
    }
    let mut mins = [f64::INFINITY; 2];
    let mut maxs = [f64::NEG_INFINITY; 2];
    for sample in train {
        for d in 0..2 {
            mins[d] = mins[d].min(sample.coords[d]);
            maxs[d] = maxs[d].max(sample.coords[d]);
        }
    }
    let ranges = [maxs[0] - mins[0], maxs[1] - mins[1]];
    let normalize = |coords: [f64; 2]| {
        let mut out = [0.0; 2];
        for d in 0..2 {
            if ranges[d] > 0.0 {
                out[d] = (coords[d] - mins[d]) / ranges[d];
            }
        }
        out
    };
    let points = train
        .iter()
        .map(|s| (s.label, normalize(s.coords)))
        .collect();
    Ok(KnnModel {
        points,
        mins,
        ranges,
    })
}

fn squared_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Majority vote among the k nearest training points.
pub fn classify(model: &KnnModel, point: &FeatureSample, k: usize) -> Result<TxLabel> {
    if k == 0 || k > model.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={}",
            model.len()
        )));
    }
    let query = model.normalize(point.coords);
    let mut order: Vec<(f64, usize)> = model
        .points
        .iter()
        .enumerate()
        .map(|(idx, (_, coords))| (squared_distance(query, *coords), idx))
        .collect();
    // Distance ties break by training-set insertion order.
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut votes: BTreeMap<TxLabel, usize> = BTreeMap::new();
    for &(_, idx) in &order[..k] {
        *votes.entry(model.points[idx].0).or_insert(0) += 1;
    }
    let top = *votes.values().max().expect("k >= 1");
    // Vote ties go to the tied class with the nearest member.
    let winner = order[..k]
        .iter()
        .map(|&(_, idx)| model.points[idx].0)
        .find(|label| votes[label] == top)
        .expect("some class holds the top vote count");
    Ok(winner)
}

/// Classification rate and confusion matrix over the test set, one entry
/// per requested k.
pub fn accuracy(model: &KnnModel, test: &[FeatureSample], ks: &[usize]) -> Result<AccuracyReport> {
    if test.is_empty() {
        return Err(Error::InvalidParameter("empty test set".into()));
    }
    let mut labels: Vec<TxLabel> = model
        .points
        .iter()
        .map(|(label, _)| *label)
        .chain(test.iter().map(|s| s.label))
        .collect();
    labels.sort_unstable();
    labels.dedup();
    let index_of = |label: TxLabel| labels.iter().position(|&l| l == label).expect("known label");

    let mut entries = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut confusion = vec![vec![0u64; labels.len()]; labels.len()];
        let mut correct = 0usize;
        for sample in test {
            let predicted = classify(model, sample, k)?;
            confusion[index_of(sample.label)][index_of(predicted)] += 1;
            if predicted == sample.label {
                correct += 1;
            }
        }
        entries.push(KAccuracy {
            k,
            rate: correct as f64 / test.len() as f64,
            confusion,
        });
    }
    Ok(AccuracyReport { labels, entries })
}
