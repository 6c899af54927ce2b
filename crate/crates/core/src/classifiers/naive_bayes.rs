//! Gaussian naive Bayes scored in log space.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_training_input, ClassifierError, ProbabilisticModel, ProbabilityMatrix, Result, Trainer};
use crate::dataset::LabeledDataset;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbParams {
    /// Variance floor as a fraction of the largest per-feature variance.
    pub var_smoothing: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbModel<T> {
    priors: Array1<T>,
    means: Array2<T>,
    variances: Array2<T>,
}

impl<T: Scalar> NbModel<T> {
    pub fn priors(&self) -> &Array1<T> {
        &self.priors
    }

    /// Class × feature means.
    pub fn means(&self) -> &Array2<T> {
        &self.means
    }

    /// Class × feature variances after flooring.
    pub fn variances(&self) -> &Array2<T> {
        &self.variances
    }

    /// Unnormalized log joint `ln P(c) + Σ_d ln N(x_d; μ, σ²)` per row and class.
    pub fn joint_log_likelihood(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.means.ncols() {
            return Err(ClassifierError::DimensionMismatch { expected: self.means.ncols(), got: x.ncols() });
        }
        let two_pi = T::lit(2.0) * T::PI();
        let half = T::lit(0.5);
        let k = self.priors.len();
        // constant part of each class's log density
        let consts: Vec<T> = (0..k)
            .map(|c| {
                self.priors[c].ln() - half * self.variances.row(c).iter().map(|&v| (two_pi * v).ln()).sum::<T>()
            })
            .collect();
        let mut out = Array2::zeros((x.nrows(), k));
        for (i, row) in x.outer_iter().enumerate() {
            for c in 0..k {
                let quad: T = row
                    .iter()
                    .zip(self.means.row(c))
                    .zip(self.variances.row(c))
                    .map(|((&xv, &m), &v)| (xv - m) * (xv - m) / v)
                    .sum();
                out[[i, c]] = consts[c] - half * quad;
            }
        }
        Ok(out)
    }
}

impl<T: Scalar> ProbabilisticModel<T> for NbModel<T> {
    fn n_classes(&self) -> usize {
        self.priors.len()
    }

    fn n_features(&self) -> usize {
        self.means.ncols()
    }

    fn predict_proba(&self, x: ArrayView2<T>) -> Result<ProbabilityMatrix<T>> {
        let mut jll = self.joint_log_likelihood(x)?;
        for mut row in jll.outer_iter_mut() {
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            row.mapv_inplace(|v| (v - max).exp());
            let total: T = row.iter().copied().sum();
            row.mapv_inplace(|v| v / total);
        }
        ProbabilityMatrix::new(jll)
    }
}

impl<T: Scalar> Trainer<T> for NbParams {
    type Model = NbModel<T>;

    fn fit(&self, x: ArrayView2<T>, labels: &[usize], n_classes: usize, _seed: u64) -> Result<NbModel<T>> {
        check_training_input(&x, labels, n_classes)?;
        let (n, d) = x.dim();
        let mut counts = vec![0usize; n_classes];
        let mut means = Array2::<T>::zeros((n_classes, d));
        for (row, &l) in x.outer_iter().zip(labels) {
            counts[l] += 1;
            means.row_mut(l).zip_mut_with(&row, |m, &v| *m += v);
        }
        if let Some(c) = counts.iter().position(|&c| c == 0) {
            return Err(ClassifierError::DegenerateInput(format!("class {c} has no samples")));
        }
        for (mut m, &c) in means.outer_iter_mut().zip(&counts) {
            let c = T::from_usize_lossy(c);
            m.mapv_inplace(|v| v / c);
        }
        let mut variances = Array2::<T>::zeros((n_classes, d));
        for (row, &l) in x.outer_iter().zip(labels) {
            let mean = means.row(l);
            for j in 0..d {
                let dev = row[j] - mean[j];
                variances[[l, j]] += dev * dev;
            }
        }
        for (mut v, &c) in variances.outer_iter_mut().zip(&counts) {
            let c = T::from_usize_lossy(c);
            v.mapv_inplace(|s| s / c);
        }

        let nf = T::from_usize_lossy(n);
        let global_max_var = (0..d)
            .map(|j| {
                let col = x.column(j);
                let mean = col.iter().copied().sum::<T>() / nf;
                col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf
            })
            .fold(T::zero(), T::max);
        let smoothing = T::lit(self.var_smoothing);
        let mut floor = smoothing * global_max_var;
        if !(floor > T::zero()) {
            floor = smoothing.max(T::min_positive_value());
        }
        variances.mapv_inplace(|v| v.max(floor));

        let priors = Array1::from_iter(counts.iter().map(|&c| T::from_usize_lossy(c) / nf));
        Ok(NbModel { priors, means, variances })
    }
}

pub fn fit_gaussian_nb<T: Scalar>(ds: &LabeledDataset<T>) -> Result<NbModel<T>> {
    NbParams::default().fit_dataset(ds, 0)
}

pub fn predict_proba_nb<T: Scalar>(model: &NbModel<T>, x: ArrayView2<T>) -> Result<ProbabilityMatrix<T>> {
    model.predict_proba(x)
}
