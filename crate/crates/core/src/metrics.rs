//! Log loss and multi-class squared error.

use ndarray::Array2;
use thiserror::Error;

use crate::classifiers::ProbabilityMatrix;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("shape mismatch: predictions are {pred_rows}×{pred_cols}, labels are {label_rows}×{label_cols}")]
    ShapeMismatch { pred_rows: usize, pred_cols: usize, label_rows: usize, label_cols: usize },
    #[error("invalid label matrix: {0}")]
    InvalidLabels(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Probabilities are clamped to at least this before taking logs.
pub const LOG_LOSS_EPS: f64 = 1e-15;

/// N×K one-hot class indicator, stored as one class index per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabelMatrix {
    pub fn from_labels(labels: &[usize], n_classes: usize) -> Result<Self> {
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(MetricsError::InvalidLabels(format!("label {l} outside 0..{n_classes}")));
        }
        Ok(Self { labels: labels.to_vec(), n_classes })
    }

    /// Accepts a 0/1 matrix with exactly one 1 per row.
    pub fn from_one_hot<T: Scalar>(y: &Array2<T>) -> Result<Self> {
        let labels = y
            .outer_iter()
            .enumerate()
            .map(|(i, row)| {
                let ones: Vec<usize> = (0..row.len()).filter(|&j| row[j] == T::one()).collect();
                let zeros = row.iter().filter(|&&v| v == T::zero()).count();
                match ones.as_slice() {
                    [j] if zeros + 1 == row.len() => Ok(*j),
                    _ => Err(MetricsError::InvalidLabels(format!("row {i} is not one-hot"))),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { labels, n_classes: y.ncols() })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn to_one_hot<T: Scalar>(&self) -> Array2<T> {
        let mut y = Array2::zeros((self.labels.len(), self.n_classes));
        for (i, &l) in self.labels.iter().enumerate() {
            y[[i, l]] = T::one();
        }
        y
    }
}

fn check_shapes<T: Scalar>(p: &ProbabilityMatrix<T>, y: &LabelMatrix) -> Result<()> {
    if p.n_rows() != y.n_rows() || p.n_classes() != y.n_classes() || y.n_rows() == 0 {
        return Err(MetricsError::ShapeMismatch {
            pred_rows: p.n_rows(),
            pred_cols: p.n_classes(),
            label_rows: y.n_rows(),
            label_cols: y.n_classes(),
        });
    }
    Ok(())
}

/// `-(1/N) Σ_i ln p_{i, y_i}` with probabilities clamped below at [`LOG_LOSS_EPS`].
pub fn log_loss<T: Scalar>(p: &ProbabilityMatrix<T>, y: &LabelMatrix) -> Result<T> {
    check_shapes(p, y)?;
    let eps = T::lit(LOG_LOSS_EPS);
    let total: T = y.labels().iter().enumerate().map(|(i, &l)| -p.values()[[i, l]].max(eps).min(T::one()).ln()).sum();
    Ok(total / T::from_usize_lossy(y.n_rows()))
}

/// `(1/N) Σ_i Σ_j (y_ij - p_ij)²`, summed over classes and not divided by K.
pub fn mse<T: Scalar>(p: &ProbabilityMatrix<T>, y: &LabelMatrix) -> Result<T> {
    check_shapes(p, y)?;
    let total: T = p
        .values()
        .outer_iter()
        .zip(y.labels())
        .map(|(row, &l)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let d = if j == l { T::one() - v } else { v };
                    d * d
                })
                .sum::<T>()
        })
        .sum();
    Ok(total / T::from_usize_lossy(y.n_rows()))
}
