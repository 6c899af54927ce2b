//! Calibration data generation and grouping (DGG), isotonic and
//! near-isotonic ensemble (ENIR) calibrators, and score mapping.
//!
//! The usual pipeline for one binary task is
//! [`dgg_generate`] → [`dgg_group`] → [`fit_enir`], and the resulting
//! ensemble is applied to raw positive-class scores with
//! [`apply_calibration`].

mod dgg;
mod enir;
mod isotonic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::Scalar;

pub use dgg::{dgg_generate, dgg_generate_task, dgg_group, DggParams};
pub use enir::{fit_enir, fit_enir_with, nearly_isotonic_path, EnirEnsemble, EnirMember, NearlyIsotonicPath, PathKnot};
pub use isotonic::{fit_isotonic, fit_isotonic_with, pava, pool_ties};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("no calibration points")]
    EmptyPool,
    #[error("binary task has a single class")]
    DegenerateTask,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid calibration point: {0}")]
    InvalidPoint(String),
    #[error("calibration points are not sorted by score")]
    Unsorted,
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

pub type Result<T> = std::result::Result<T, CalibrationError>;

/// Slack allowed on scores just outside `[0, 1]` before they are rejected.
pub const SCORE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint<T> {
    /// Raw positive-class probability.
    pub score: T,
    /// Observed positive fraction.
    pub target: T,
    pub weight: T,
}

impl<T: Scalar> CalibrationPoint<T> {
    pub fn unit(score: T, target: T) -> Self {
        Self { score, target, weight: T::one() }
    }
}

pub(crate) fn validate_points<T: Scalar>(points: &[CalibrationPoint<T>]) -> Result<()> {
    if points.is_empty() {
        return Err(CalibrationError::EmptyPool);
    }
    let unit = |v: T| v >= T::zero() && v <= T::one();
    for (i, p) in points.iter().enumerate() {
        if !unit(p.score) || !unit(p.target) || !(p.weight > T::zero()) || !p.weight.is_finite() {
            return Err(CalibrationError::InvalidPoint(format!("point {i}: {p:?}")));
        }
    }
    if points.windows(2).any(|w| w[0].score > w[1].score) {
        return Err(CalibrationError::Unsorted);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Straight lines between breakpoints.
    #[default]
    Linear,
    /// Value of the nearest breakpoint at or below the score.
    Step,
}

/// Monotone-fit lookup table from raw score to probability.
///
/// Scores below the first or above the last breakpoint map to the boundary
/// value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMap<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    interpolation: Interpolation,
}

impl<T: Scalar> CalibrationMap<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, interpolation: Interpolation) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(CalibrationError::EmptyPool);
        }
        if breakpoints.len() != values.len() {
            return Err(CalibrationError::InvalidParameter(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CalibrationError::Unsorted);
        }
        if values.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return Err(CalibrationError::InvalidParameter("fitted values must lie in [0, 1]".into()));
        }
        Ok(Self { breakpoints, values, interpolation })
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    fn eval(&self, s: T) -> T {
        let bp = &self.breakpoints;
        let last = bp.len() - 1;
        if s <= bp[0] {
            return self.values[0];
        }
        if s >= bp[last] {
            return self.values[last];
        }
        // bp[hi - 1] < s < bp[hi] after the boundary checks, unless s hits a breakpoint exactly
        let hi = bp.partition_point(|&b| b <= s);
        let lo = hi - 1;
        match self.interpolation {
            Interpolation::Step => self.values[lo],
            Interpolation::Linear => {
                let t = (s - bp[lo]) / (bp[hi] - bp[lo]);
                self.values[lo] + t * (self.values[hi] - self.values[lo])
            }
        }
    }
}

/// Anything that maps a raw score to a calibrated probability.
pub trait Calibrate<T: Scalar> {
    /// Calibrated probability for a score already checked to lie in `[0, 1]`.
    fn map_score(&self, score: T) -> T;
}

impl<T: Scalar> Calibrate<T> for CalibrationMap<T> {
    fn map_score(&self, score: T) -> T {
        self.eval(score)
    }
}

/// Either kind of fitted calibrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibrator<T> {
    Isotonic(CalibrationMap<T>),
    Enir(EnirEnsemble<T>),
}

impl<T: Scalar> Calibrate<T> for Calibrator<T> {
    fn map_score(&self, score: T) -> T {
        match self {
            Calibrator::Isotonic(m) => m.map_score(score),
            Calibrator::Enir(e) => e.map_score(score),
        }
    }
}

/// Maps `score` through a calibrator, rejecting scores outside `[0, 1]`
/// beyond [`SCORE_SLACK`].
pub fn apply_calibration<T: Scalar, C: Calibrate<T> + ?Sized>(calibrator: &C, score: T) -> Result<T> {
    let slack = T::lit(SCORE_SLACK);
    if !(score >= -slack && score <= T::one() + slack) {
        return Err(CalibrationError::ScoreOutOfRange(score.as_f64()));
    }
    let s = score.max(T::zero()).min(T::one());
    Ok(calibrator.map_score(s).max(T::zero()).min(T::one()))
}

/// Which calibrator the DGG data is fed to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibratorKind {
    Isotonic,
    #[default]
    Enir,
}

pub fn fit_calibrator<T: Scalar>(
    kind: CalibratorKind,
    points: &[CalibrationPoint<T>],
    interpolation: Interpolation,
) -> Result<Calibrator<T>> {
    Ok(match kind {
        CalibratorKind::Isotonic => Calibrator::Isotonic(fit_isotonic_with(points, interpolation)?),
        CalibratorKind::Enir => Calibrator::Enir(fit_enir_with(points, interpolation)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_midpoint_and_clamping() {
        let map = CalibrationMap::new(vec![0.2f64, 0.8], vec![0.1, 0.7], Interpolation::Linear).unwrap();
        assert!((apply_calibration(&map, 0.5).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(apply_calibration(&map, 0.0).unwrap(), 0.1);
        assert_eq!(apply_calibration(&map, 1.0).unwrap(), 0.7);
        assert_eq!(apply_calibration(&map, 0.8).unwrap(), 0.7);
        assert_eq!(apply_calibration(&map, 0.2).unwrap(), 0.1);
    }

    #[test]
    fn step_interpolation() {
        let map = CalibrationMap::new(vec![0.2, 0.5, 0.8], vec![0.1, 0.3, 0.7], Interpolation::Step).unwrap();
        assert_eq!(apply_calibration(&map, 0.49).unwrap(), 0.1);
        assert_eq!(apply_calibration(&map, 0.5).unwrap(), 0.3);
        assert_eq!(apply_calibration(&map, 0.79).unwrap(), 0.3);
    }

    #[test]
    fn out_of_range_scores() {
        let map = CalibrationMap::new(vec![0.5], vec![0.25], Interpolation::Linear).unwrap();
        assert!(matches!(apply_calibration(&map, 1.1), Err(CalibrationError::ScoreOutOfRange(_))));
        assert!(matches!(apply_calibration(&map, -0.01), Err(CalibrationError::ScoreOutOfRange(_))));
        assert!(matches!(apply_calibration(&map, f64::NAN), Err(CalibrationError::ScoreOutOfRange(_))));
        assert_eq!(apply_calibration(&map, 1.0 + 1e-13).unwrap(), 0.25);
    }

    #[test]
    fn map_validation() {
        assert!(CalibrationMap::new(vec![0.5, 0.5], vec![0.1, 0.2], Interpolation::Linear).is_err());
        assert!(CalibrationMap::new(vec![0.1, 0.5], vec![0.1, 1.2], Interpolation::Linear).is_err());
        assert!(CalibrationMap::<f64>::new(vec![], vec![], Interpolation::Linear).is_err());
    }

    #[test]
    fn identity_like_fit() {
        let points: Vec<_> = (0..=20).map(|i| CalibrationPoint::unit(i as f64 / 20.0, i as f64 / 20.0)).collect();
        let map = fit_isotonic(&points).unwrap();
        for s in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert!((apply_calibration(&map, s).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let points: Vec<_> = [(0.1, 0.0), (0.4, 1.0), (0.5, 0.0), (0.9, 1.0)]
            .iter()
            .map(|&(s, t)| CalibrationPoint::unit(s, t))
            .collect();
        let cal = fit_calibrator(CalibratorKind::Enir, &points, Interpolation::Linear).unwrap();
        let json = serde_json::to_string(&cal).unwrap();
        let back: Calibrator<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cal);
        assert!(json.contains("\"kind\":\"enir\""));
    }

    proptest! {
        #[test]
        fn isotonic_map_is_monotone(
            raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let mut points: Vec<_> = raw.iter().map(|&(s, t)| CalibrationPoint::unit(s, t)).collect();
            points.sort_by(|p, q| p.score.partial_cmp(&q.score).unwrap());
            let map = fit_isotonic(&points).unwrap();
            prop_assert!(map.is_nondecreasing());
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(apply_calibration(&map, lo).unwrap() <= apply_calibration(&map, hi).unwrap());
        }
    }
}
