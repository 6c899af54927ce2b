//! Calibrated multi-class probability estimates for small data sets.
//!
//! A K-class problem is split into binary tasks (one-vs-rest or all pairs),
//! each binary classifier is calibrated on Monte-Carlo generated and grouped
//! calibration data with an ensemble of near-isotonic regression maps, and the
//! calibrated binary probabilities are recombined by normalization or pairwise
//! coupling. The [`harness`] module runs the full cross-validated comparison of
//! the five calibration scenarios.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the harness and CLI use.

pub mod calibration;
pub mod classifiers;
pub mod coupling;
pub mod dataset;
pub mod decomposition;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod selftest;
pub mod stats;

pub use scalar::Scalar;

pub type Dataset = dataset::LabeledDataset<f64>;
pub type ProbabilityMatrix = classifiers::ProbabilityMatrix<f64>;
pub type NbModel = classifiers::NbModel<f64>;
pub type RfModel = classifiers::RfModel<f64>;
pub type CalibrationPoint = calibration::CalibrationPoint<f64>;
pub type CalibrationMap = calibration::CalibrationMap<f64>;
pub type EnirEnsemble = calibration::EnirEnsemble<f64>;
pub type PairwiseEstimates = coupling::PairwiseEstimates<f64>;
pub type TestResult = stats::TestResult<f64>;
