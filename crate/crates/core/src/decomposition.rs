//! One-vs-rest and all-pairs decomposition of a K-class problem.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledDataset;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("decomposition needs at least two classes, got {0}")]
    TooFewClasses(usize),
}

pub type Result<T> = std::result::Result<T, DecompositionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    OneVsRest,
    AllPairs,
}

/// A relabeled view of a data set for one binary subproblem.
///
/// `binary_labels[i]` is 1 exactly when the sample at `sample_indices[i]`
/// belongs to `positive_class`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryTask {
    pub scheme: Scheme,
    pub positive_class: usize,
    pub negative_classes: Vec<usize>,
    pub sample_indices: Vec<usize>,
    pub binary_labels: Vec<usize>,
}

impl BinaryTask {
    pub fn len(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_indices.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.binary_labels.iter().filter(|&&l| l == 1).count()
    }

    /// True when the task's samples contain only one of its two sides.
    pub fn is_degenerate(&self) -> bool {
        let pos = self.positive_count();
        pos == 0 || pos == self.len()
    }

    /// Fraction of positive samples; 0 for an empty task.
    pub fn positive_prior(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.positive_count() as f64 / self.len() as f64
        }
    }

    /// Feature rows of this task, gathered from the parent data set.
    pub fn features<T: Scalar>(&self, parent: &LabeledDataset<T>) -> Array2<T> {
        parent.features().select(Axis(0), &self.sample_indices)
    }
}

pub fn binary_task_count(n_classes: usize, scheme: Scheme) -> Result<usize> {
    if n_classes < 2 {
        return Err(DecompositionError::TooFewClasses(n_classes));
    }
    Ok(match scheme {
        Scheme::OneVsRest => n_classes,
        Scheme::AllPairs => n_classes * (n_classes - 1) / 2,
    })
}

/// One task per class, each over every sample.
pub fn ovr_tasks_from_labels(labels: &[usize], n_classes: usize) -> Result<Vec<BinaryTask>> {
    binary_task_count(n_classes, Scheme::OneVsRest)?;
    Ok((0..n_classes)
        .map(|c| BinaryTask {
            scheme: Scheme::OneVsRest,
            positive_class: c,
            negative_classes: (0..n_classes).filter(|&o| o != c).collect(),
            sample_indices: (0..labels.len()).collect(),
            binary_labels: labels.iter().map(|&l| usize::from(l == c)).collect(),
        })
        .collect())
}

/// One task per class pair `(i, j)` with `i < j`, in lexicographic order.
/// Class `i` is the positive side and only samples of `i` or `j` are kept.
pub fn allpairs_tasks_from_labels(labels: &[usize], n_classes: usize) -> Result<Vec<BinaryTask>> {
    binary_task_count(n_classes, Scheme::AllPairs)?;
    let mut tasks = Vec::new();
    for i in 0..n_classes {
        for j in i + 1..n_classes {
            let sample_indices: Vec<usize> = (0..labels.len()).filter(|&s| labels[s] == i || labels[s] == j).collect();
            let binary_labels = sample_indices.iter().map(|&s| usize::from(labels[s] == i)).collect();
            tasks.push(BinaryTask {
                scheme: Scheme::AllPairs,
                positive_class: i,
                negative_classes: vec![j],
                sample_indices,
                binary_labels,
            });
        }
    }
    Ok(tasks)
}

pub fn build_ovr_tasks<T: Scalar>(ds: &LabeledDataset<T>) -> Result<Vec<BinaryTask>> {
    ovr_tasks_from_labels(ds.labels(), ds.n_classes())
}

pub fn build_allpairs_tasks<T: Scalar>(ds: &LabeledDataset<T>) -> Result<Vec<BinaryTask>> {
    allpairs_tasks_from_labels(ds.labels(), ds.n_classes())
}

pub fn build_tasks<T: Scalar>(ds: &LabeledDataset<T>, scheme: Scheme) -> Result<Vec<BinaryTask>> {
    match scheme {
        Scheme::OneVsRest => build_ovr_tasks(ds),
        Scheme::AllPairs => build_allpairs_tasks(ds),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels_for(sizes: &[usize]) -> Vec<usize> {
        sizes.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect()
    }

    #[test]
    fn counts_for_known_class_numbers() {
        assert_eq!(binary_task_count(5, Scheme::OneVsRest), Ok(5));
        assert_eq!(binary_task_count(6, Scheme::AllPairs), Ok(15));
        assert_eq!(binary_task_count(2, Scheme::AllPairs), Ok(1));
        assert_eq!(binary_task_count(1, Scheme::AllPairs), Err(DecompositionError::TooFewClasses(1)));
        assert_eq!(ovr_tasks_from_labels(&labels_for(&[2, 2, 2]), 3).unwrap().len(), 3);
        assert_eq!(allpairs_tasks_from_labels(&labels_for(&[1; 10]), 10).unwrap().len(), 45);
        assert_eq!(allpairs_tasks_from_labels(&labels_for(&[1; 4]), 4).unwrap().len(), 6);
    }

    #[test]
    fn two_class_ovr_tasks_are_complements() {
        let labels = vec![0, 1, 1, 0, 1];
        let tasks = ovr_tasks_from_labels(&labels, 2).unwrap();
        for i in 0..labels.len() {
            assert_eq!(tasks[0].binary_labels[i] + tasks[1].binary_labels[i], 1);
        }
    }

    #[test]
    fn two_class_allpairs_is_original_problem() {
        let labels = vec![0, 1, 1, 0, 1];
        let tasks = allpairs_tasks_from_labels(&labels, 2).unwrap();
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].sample_indices, vec![0, 1, 2, 3, 4]);
        assert_eq!(tasks[0].binary_labels, vec![1, 0, 0, 1, 0]);
        assert_eq!(tasks[0].negative_classes, vec![1]);
    }

    #[test]
    fn degenerate_detection() {
        let labels = vec![0, 0, 2, 2];
        let tasks = allpairs_tasks_from_labels(&labels, 3).unwrap();
        // (0,1): only class 0 present
        assert!(tasks[0].is_degenerate());
        assert!(!tasks[1].is_degenerate());
        assert_eq!(tasks[1].positive_prior(), 0.5);
        // (1,2): only class 2
        assert!(tasks[2].is_degenerate());
        assert_eq!(tasks[2].positive_prior(), 0.0);
    }

    proptest! {
        #[test]
        fn structure_holds(sizes in prop::collection::vec(1usize..12, 2..13)) {
            let labels = labels_for(&sizes);
            let k = sizes.len();
            let n = labels.len();
            let ovr = ovr_tasks_from_labels(&labels, k).unwrap();
            let ap = allpairs_tasks_from_labels(&labels, k).unwrap();
            prop_assert_eq!(ovr.len(), binary_task_count(k, Scheme::OneVsRest).unwrap());
            prop_assert_eq!(ap.len(), binary_task_count(k, Scheme::AllPairs).unwrap());
            prop_assert_eq!(ovr.iter().map(BinaryTask::len).sum::<usize>(), k * n);
            let mut pair_total = 0;
            for i in 0..k { for j in i + 1..k { pair_total += sizes[i] + sizes[j]; } }
            prop_assert_eq!(ap.iter().map(BinaryTask::len).sum::<usize>(), pair_total);
            for t in &ovr {
                // class-imbalance identity
                prop_assert_eq!(t.positive_count(), sizes[t.positive_class]);
                prop_assert_eq!(t.negative_classes.len(), k - 1);
            }
            for t in &ap {
                let neg = t.negative_classes[0];
                prop_assert!(t.positive_class < neg);
                for (s, &b) in t.sample_indices.iter().zip(&t.binary_labels) {
                    prop_assert!(labels[*s] == t.positive_class || labels[*s] == neg);
                    prop_assert_eq!(b == 1, labels[*s] == t.positive_class);
                }
            }
        }
    }
}
