//! Labeled data sets: ingestion, class merging, stratified folds and the
//! synthetic Waveform generator.

mod csv_load;
mod folds;
mod waveform;

use std::collections::{HashMap, HashSet};

use ndarray::{Array2, Axis};
use thiserror::Error;

use crate::Scalar;

pub use csv_load::{load_csv, read_csv, write_csv, CsvOptions, Delimiter, LabelColumn, LoadReport};
pub use folds::{stratified_kfold, FoldPlan};
pub use waveform::{generate_waveform, generate_waveform_with_noise, waveform_base, WAVEFORM_FEATURES};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("no usable rows")]
    EmptyDataset,
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("class {0:?} appears in more than one merge group")]
    OverlappingGroups(String),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Feature matrix with dense integer class labels.
///
/// Labels are indices into `class_names`. A data set built with
/// [`LabeledDataset::new`] has finite features and at least one sample in
/// every class. Subsets taken with [`LabeledDataset::subset`] keep the full
/// class list, so a class can be absent from a subset.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    features: Array2<T>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(features: Array2<T>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(DatasetError::Invalid(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DatasetError::Invalid("non-finite feature value".into()));
        }
        let k = class_names.len();
        let mut counts = vec![0usize; k];
        for &l in &labels {
            if l >= k {
                return Err(DatasetError::Invalid(format!("label {l} outside 0..{k}")));
            }
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(DatasetError::TooFewSamples(format!("class {:?} has no samples", class_names[c])));
        }
        Ok(Self { features, labels, class_names })
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Number of samples per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order. Class indices are preserved.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Collapses each group of class names into one class.
///
/// A merged class takes the position of its lowest-indexed member and is
/// named by joining the member names with `+`. Ungrouped classes keep their
/// names and relative order. Features are not touched.
pub fn merge_classes<T: Scalar>(ds: &LabeledDataset<T>, groups: &[Vec<String>]) -> Result<LabeledDataset<T>> {
    let index: HashMap<&str, usize> = ds.class_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    // old class -> group id
    let mut group_of: Vec<Option<usize>> = vec![None; ds.n_classes()];
    let mut seen = HashSet::new();
    for (g, members) in groups.iter().enumerate() {
        for name in members {
            let &c = index.get(name.as_str()).ok_or_else(|| DatasetError::UnknownClass(name.clone()))?;
            if !seen.insert(c) {
                return Err(DatasetError::OverlappingGroups(name.clone()));
            }
            group_of[c] = Some(g);
        }
    }

    let mut remap = vec![usize::MAX; ds.n_classes()];
    let mut group_new: Vec<Option<usize>> = vec![None; groups.len()];
    let mut names = Vec::new();
    for c in 0..ds.n_classes() {
        match group_of[c] {
            None => {
                remap[c] = names.len();
                names.push(ds.class_names[c].clone());
            }
            Some(g) => {
                let id = *group_new[g].get_or_insert_with(|| {
                    let members: Vec<&str> = (0..ds.n_classes())
                        .filter(|&o| group_of[o] == Some(g))
                        .map(|o| ds.class_names[o].as_str())
                        .collect();
                    names.push(members.join("+"));
                    names.len() - 1
                });
                remap[c] = id;
            }
        }
    }

    Ok(LabeledDataset {
        features: ds.features.clone(),
        labels: ds.labels.iter().map(|&l| remap[l]).collect(),
        class_names: names,
    })
}

/// Removes every sample of the named classes and re-encodes the remaining
/// labels densely, keeping their relative order.
pub fn drop_classes<T: Scalar>(ds: &LabeledDataset<T>, names: &[String]) -> Result<LabeledDataset<T>> {
    let mut dropped = vec![false; ds.n_classes()];
    for name in names {
        let c = ds.class_names.iter().position(|n| n == name).ok_or_else(|| DatasetError::UnknownClass(name.clone()))?;
        dropped[c] = true;
    }
    let mut remap = vec![usize::MAX; ds.n_classes()];
    let mut class_names = Vec::new();
    for c in (0..ds.n_classes()).filter(|&c| !dropped[c]) {
        remap[c] = class_names.len();
        class_names.push(ds.class_names[c].clone());
    }
    let keep: Vec<usize> = (0..ds.n_samples()).filter(|&i| !dropped[ds.labels[i]]).collect();
    LabeledDataset::new(
        ds.features.select(Axis(0), &keep),
        keep.iter().map(|&i| remap[ds.labels[i]]).collect(),
        class_names,
    )
}
