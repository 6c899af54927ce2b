//! Base classifiers producing class-probability estimates.
//!
//! Both classifiers implement [`Trainer`], the factory interface that the
//! calibration data generator and the harness use to refit models on
//! resampled or relabeled data.

mod forest;
mod naive_bayes;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledDataset;
use crate::Scalar;

pub use forest::{fit_random_forest, predict_proba_rf, DecisionTree, LeafVote, MaxFeatures, RfModel, RfParams, TreeNode};
pub use naive_bayes::{fit_gaussian_nb, predict_proba_nb, NbModel, NbParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("degenerate training data: {0}")]
    DegenerateInput(String),
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probability matrix invalid: {0}")]
    InvalidProbabilities(String),
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

/// Tolerance on row sums of a [`ProbabilityMatrix`].
pub fn row_sum_tolerance<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(1e3))
}

/// N×K matrix whose rows are probability vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityMatrix<T>(Array2<T>);

impl<T: Scalar> ProbabilityMatrix<T> {
    /// Validates entries in `[0, 1]` and rows summing to one.
    pub fn new(values: Array2<T>) -> Result<Self> {
        let tol = row_sum_tolerance::<T>();
        for (i, row) in values.outer_iter().enumerate() {
            if row.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
                return Err(ClassifierError::InvalidProbabilities(format!("row {i} has an entry outside [0, 1]")));
            }
            let s: T = row.iter().copied().sum();
            if (s - T::one()).abs() > tol {
                return Err(ClassifierError::InvalidProbabilities(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Array2<T> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<T> {
        self.0
    }

    pub fn n_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.0.ncols()
    }
}

/// A fitted model that scores feature rows.
pub trait ProbabilisticModel<T: Scalar>: Send + Sync {
    fn n_classes(&self) -> usize;

    fn n_features(&self) -> usize;

    fn predict_proba(&self, x: ArrayView2<T>) -> Result<ProbabilityMatrix<T>>;

    /// Probability of class 1 for every row; meaningful for two-class models.
    fn positive_scores(&self, x: ArrayView2<T>) -> Result<Vec<T>> {
        Ok(self.predict_proba(x)?.values().column(1).to_vec())
    }
}

/// Fits models from raw rows and labels in `0..n_classes`.
pub trait Trainer<T: Scalar>: Send + Sync {
    type Model: ProbabilisticModel<T>;

    fn fit(&self, x: ArrayView2<T>, labels: &[usize], n_classes: usize, seed: u64) -> Result<Self::Model>;

    fn fit_dataset(&self, ds: &LabeledDataset<T>, seed: u64) -> Result<Self::Model> {
        self.fit(ds.features().view(), ds.labels(), ds.n_classes(), seed)
    }
}

/// Classifier choice with hyperparameters, as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    NaiveBayes(#[serde(default)] NbParams),
    RandomForest(#[serde(default)] RfParams),
}

impl ClassifierSpec {
    /// Short identifier used in result tables.
    pub fn id(&self) -> &'static str {
        match self {
            ClassifierSpec::NaiveBayes(_) => "nb",
            ClassifierSpec::RandomForest(_) => "rf",
        }
    }
}

#[derive(Debug, Clone)]
pub enum FittedModel<T> {
    NaiveBayes(NbModel<T>),
    RandomForest(RfModel<T>),
}

impl<T: Scalar> ProbabilisticModel<T> for FittedModel<T> {
    fn n_classes(&self) -> usize {
        match self {
            FittedModel::NaiveBayes(m) => m.n_classes(),
            FittedModel::RandomForest(m) => m.n_classes(),
        }
    }

    fn n_features(&self) -> usize {
        match self {
            FittedModel::NaiveBayes(m) => m.n_features(),
            FittedModel::RandomForest(m) => m.n_features(),
        }
    }

    fn predict_proba(&self, x: ArrayView2<T>) -> Result<ProbabilityMatrix<T>> {
        match self {
            FittedModel::NaiveBayes(m) => m.predict_proba(x),
            FittedModel::RandomForest(m) => m.predict_proba(x),
        }
    }
}

impl<T: Scalar> Trainer<T> for ClassifierSpec {
    type Model = FittedModel<T>;

    fn fit(&self, x: ArrayView2<T>, labels: &[usize], n_classes: usize, seed: u64) -> Result<FittedModel<T>> {
        match self {
            ClassifierSpec::NaiveBayes(p) => p.fit(x, labels, n_classes, seed).map(FittedModel::NaiveBayes),
            ClassifierSpec::RandomForest(p) => p.fit(x, labels, n_classes, seed).map(FittedModel::RandomForest),
        }
    }
}

pub(crate) fn check_training_input<T>(x: &ArrayView2<T>, labels: &[usize], n_classes: usize) -> Result<()> {
    if labels.is_empty() {
        return Err(ClassifierError::DegenerateInput("no training samples".into()));
    }
    if x.nrows() != labels.len() {
        return Err(ClassifierError::DegenerateInput(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    if n_classes < 2 {
        return Err(ClassifierError::DegenerateInput(format!("{n_classes} classes")));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(ClassifierError::DegenerateInput(format!("label {l} outside 0..{n_classes}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn probability_matrix_validation() {
        assert!(ProbabilityMatrix::new(array![[0.25, 0.75], [1.0, 0.0]]).is_ok());
        assert!(ProbabilityMatrix::new(array![[0.5, 0.6]]).is_err());
        assert!(ProbabilityMatrix::new(array![[1.5, -0.5]]).is_err());
        assert!(ProbabilityMatrix::new(array![[f64::NAN, 1.0]]).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec: ClassifierSpec = serde_json::from_str(r#"{"kind":"random_forest","n_trees":7}"#).unwrap();
        match &spec {
            ClassifierSpec::RandomForest(p) => {
                assert_eq!(p.n_trees, 7);
                assert_eq!(p.min_leaf, 1);
            }
            _ => panic!("wrong variant"),
        }
        let nb: ClassifierSpec = serde_json::from_str(r#"{"kind":"naive_bayes"}"#).unwrap();
        assert_eq!(nb.id(), "nb");
    }
}
