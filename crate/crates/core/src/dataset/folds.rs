use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetError, LabeledDataset, Result};
use crate::rng;
use crate::Scalar;

/// Assignment of every sample to exactly one test fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Stratified k-fold assignment.
///
/// Each class's indices are shuffled with a stream keyed by `(seed, class)`
/// and dealt round-robin over the folds. The dealing for class `c` starts at
/// the fold after the one where class `c - 1` stopped, so overall fold sizes
/// are balanced as well as per-class counts. A class with fewer than `k`
/// samples simply leaves some folds without test samples of that class.
pub fn stratified_kfold<T: Scalar>(ds: &LabeledDataset<T>, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(DatasetError::Invalid(format!("fold count must be at least 2, got {k}")));
    }
    if ds.n_samples() < k {
        return Err(DatasetError::TooFewSamples(format!("{} samples for {k} folds", ds.n_samples())));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (i, &l) in ds.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(DatasetError::TooFewSamples(format!("class {:?} has no samples", ds.class_names()[c])));
    }

    let mut assignments = vec![0; ds.n_samples()];
    let mut offset = 0;
    for (c, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng::stream(seed, &[c as u64]));
        for (j, &i) in members.iter().enumerate() {
            assignments[i] = (offset + j) % k;
        }
        offset = (offset + members.len()) % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}
