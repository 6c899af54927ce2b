//! Recombination of binary-task outputs into class-probability vectors.
//!
//! One-vs-rest scores are linearly normalized. All-pairs estimates
//! `r[i][j] ≈ P(i | i or j)` are coupled by minimizing
//! `Σ_{i<j} (r[j][i] p_i - r[i][j] p_j)²` over the simplex, solved with the
//! fixed-point iteration of Wu, Lin and Weng.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("need at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("invalid estimates: {0}")]
    InvalidEstimates(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, CouplingError>;

/// Tolerance on `r[i][j] + r[j][i] = 1`.
pub const COMPLEMENT_TOLERANCE: f64 = 1e-9;

/// Per-class positive probabilities from the K one-vs-rest tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OvrScores<T>(Vec<T>);

impl<T: Scalar> OvrScores<T> {
    pub fn new(scores: Vec<T>) -> Result<Self> {
        if scores.len() < 2 {
            return Err(CouplingError::TooFewClasses(scores.len()));
        }
        if let Some(s) = scores.iter().find(|&&s| !(s >= T::zero() && s <= T::one())) {
            return Err(CouplingError::InvalidEstimates(format!("score {s} outside [0, 1]")));
        }
        Ok(Self(scores))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }
}

/// Divides each score by the total; an all-zero vector maps to uniform.
pub fn normalize_combine<T: Scalar>(scores: &OvrScores<T>) -> Vec<T> {
    let s = scores.values();
    let total: T = s.iter().copied().sum();
    if total > T::zero() {
        s.iter().map(|&v| v / total).collect()
    } else {
        vec![T::one() / T::from_usize_lossy(s.len()); s.len()]
    }
}

/// K×K matrix of pairwise conditional estimates; the diagonal is unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEstimates<T> {
    r: Array2<T>,
}

impl<T: Scalar> PairwiseEstimates<T> {
    pub fn new(r: Array2<T>) -> Result<Self> {
        let k = r.nrows();
        if r.ncols() != k {
            return Err(CouplingError::InvalidEstimates(format!("{}×{} matrix is not square", k, r.ncols())));
        }
        if k < 2 {
            return Err(CouplingError::TooFewClasses(k));
        }
        let tol = T::lit(COMPLEMENT_TOLERANCE);
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let v = r[[i, j]];
                if !(v >= T::zero() && v <= T::one()) {
                    return Err(CouplingError::InvalidEstimates(format!("r[{i}][{j}] = {v}")));
                }
                if (v + r[[j, i]] - T::one()).abs() > tol {
                    return Err(CouplingError::InvalidEstimates(format!("r[{i}][{j}] + r[{j}][{i}] ≠ 1")));
                }
            }
        }
        Ok(Self { r })
    }

    /// Builds the matrix from `f(i, j)` for `i < j`, filling `r[j][i] = 1 - r[i][j]`.
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut r = Array2::from_elem((k, k), T::lit(0.5));
        for i in 0..k {
            for j in i + 1..k {
                let v = f(i, j);
                r[[i, j]] = v;
                r[[j, i]] = T::one() - v;
            }
        }
        Self::new(r)
    }

    pub fn n_classes(&self) -> usize {
        self.r.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.r[[i, j]]
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CouplingParams {
    pub tol: f64,
    pub max_iter: usize,
    /// Estimates are clamped to `[clamp, 1 - clamp]` before solving.
    pub clamp: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 1000, clamp: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledProbabilities<T> {
    pub probabilities: Vec<T>,
    pub iterations: usize,
    /// False when `max_iter` ran out; `probabilities` is then the best iterate seen.
    pub converged: bool,
}

/// Couples pairwise estimates into one probability vector.
///
/// With two classes the minimizer is `(r[0][1], r[1][0])` exactly, which is
/// returned directly.
pub fn pairwise_couple<T: Scalar>(est: &PairwiseEstimates<T>, params: &CouplingParams) -> Result<CoupledProbabilities<T>> {
    if !(params.tol > 0.0) {
        return Err(CouplingError::InvalidParameter(format!("tolerance {} must be positive", params.tol)));
    }
    if !(0.0..0.5).contains(&params.clamp) {
        return Err(CouplingError::InvalidParameter(format!("clamp {} not in [0, 0.5)", params.clamp)));
    }
    let k = est.n_classes();
    if k == 2 {
        let p0 = est.get(0, 1);
        return Ok(CoupledProbabilities { probabilities: vec![p0, T::one() - p0], iterations: 0, converged: true });
    }

    let (lo, hi) = (T::lit(params.clamp), T::one() - T::lit(params.clamp));
    let r = est.matrix().mapv(|v| v.max(lo).min(hi));
    let mut q = Array2::<T>::zeros((k, k));
    for t in 0..k {
        for j in 0..k {
            if j != t {
                q[[t, t]] += r[[j, t]] * r[[j, t]];
                q[[t, j]] = -r[[j, t]] * r[[t, j]];
            }
        }
    }
    let objective = |p: &[T]| -> T {
        (0..k).map(|i| p[i] * (0..k).map(|j| q[[i, j]] * p[j]).sum::<T>()).sum()
    };

    let tol = T::lit(params.tol);
    let mut p = vec![T::one() / T::from_usize_lossy(k); k];
    let mut best = (objective(&p), p.clone());
    for iter in 1..=params.max_iter {
        let prev = p.clone();
        for t in 0..k {
            let qp: Vec<T> = (0..k).map(|i| (0..k).map(|j| q[[i, j]] * p[j]).sum()).collect();
            let pqp: T = (0..k).map(|i| p[i] * qp[i]).sum();
            let diff = (pqp - qp[t]) / q[[t, t]];
            p[t] += diff;
            let norm = T::one() + diff;
            p.iter_mut().for_each(|v| *v /= norm);
        }
        let obj = objective(&p);
        if obj < best.0 {
            best = (obj, p.clone());
        }
        let change = p.iter().zip(&prev).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        if change < tol {
            return Ok(CoupledProbabilities { probabilities: to_simplex(p), iterations: iter, converged: true });
        }
    }
    log::debug!("pairwise coupling did not converge in {} iterations", params.max_iter);
    Ok(CoupledProbabilities { probabilities: to_simplex(best.1), iterations: params.max_iter, converged: false })
}

fn to_simplex<T: Scalar>(mut p: Vec<T>) -> Vec<T> {
    p.iter_mut().for_each(|v| *v = v.max(T::zero()));
    let total: T = p.iter().copied().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}
