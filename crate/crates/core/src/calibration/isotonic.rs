//! Weighted isotonic regression by pool-adjacent-violators.

use super::{validate_points, CalibrationMap, CalibrationPoint, Interpolation, Result};
use crate::Scalar;

/// Merges points with equal scores into one point carrying their weighted
/// mean target and total weight. Input must be sorted by score.
pub fn pool_ties<T: Scalar>(points: &[CalibrationPoint<T>]) -> Vec<CalibrationPoint<T>> {
    let mut out: Vec<CalibrationPoint<T>> = Vec::with_capacity(points.len());
    let mut sum_wy = T::zero();
    for p in points {
        match out.last_mut() {
            Some(last) if last.score == p.score => {
                sum_wy += p.weight * p.target;
                last.weight += p.weight;
                last.target = sum_wy / last.weight;
            }
            _ => {
                sum_wy = p.weight * p.target;
                out.push(*p);
            }
        }
    }
    out
}

/// Nondecreasing weighted least-squares fit of `targets`, one value per input.
pub fn pava<T: Scalar>(targets: &[T], weights: &[T]) -> Vec<T> {
    assert_eq!(targets.len(), weights.len());
    // (weighted sum, weight, length)
    let mut blocks: Vec<(T, T, usize)> = Vec::with_capacity(targets.len());
    for (&y, &w) in targets.iter().zip(weights) {
        blocks.push((w * y, w, 1));
        while blocks.len() > 1 {
            let (s1, w1, n1) = blocks[blocks.len() - 1];
            let (s0, w0, n0) = blocks[blocks.len() - 2];
            if s0 / w0 <= s1 / w1 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().expect("two blocks") = (s0 + s1, w0 + w1, n0 + n1);
        }
    }
    blocks.into_iter().flat_map(|(s, w, n)| std::iter::repeat_n(s / w, n)).collect()
}

pub fn fit_isotonic<T: Scalar>(points: &[CalibrationPoint<T>]) -> Result<CalibrationMap<T>> {
    fit_isotonic_with(points, Interpolation::Linear)
}

pub fn fit_isotonic_with<T: Scalar>(points: &[CalibrationPoint<T>], interpolation: Interpolation) -> Result<CalibrationMap<T>> {
    validate_points(points)?;
    let pooled = pool_ties(points);
    let targets: Vec<T> = pooled.iter().map(|p| p.target).collect();
    let weights: Vec<T> = pooled.iter().map(|p| p.weight).collect();
    let fitted = pava(&targets, &weights).into_iter().map(|v| v.max(T::zero()).min(T::one())).collect();
    CalibrationMap::new(pooled.iter().map(|p| p.score).collect(), fitted, interpolation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::CalibrationError;
    use crate::selftest::brute_force_isotonic;
    use proptest::prelude::*;

    fn pts(targets: &[f64]) -> Vec<CalibrationPoint<f64>> {
        targets.iter().enumerate().map(|(i, &t)| CalibrationPoint::unit(i as f64 / 10.0, t)).collect()
    }

    #[test]
    fn single_violation_pools() {
        // oracle: brute_force_isotonic([0,1,0]) = [0, 0.5, 0.5]
        assert_eq!(fit_isotonic(&pts(&[0.0, 1.0, 0.0])).unwrap().values(), &[0.0, 0.5, 0.5]);
        assert_eq!(fit_isotonic(&pts(&[1.0, 0.0])).unwrap().values(), &[0.5, 0.5]);
    }

    #[test]
    fn monotone_input_is_unchanged() {
        let t = [0.0, 0.1, 0.1, 0.6, 1.0];
        assert_eq!(fit_isotonic(&pts(&t)).unwrap().values(), &t);
    }

    #[test]
    fn ties_are_pooled_before_fitting() {
        let points = vec![
            CalibrationPoint::unit(0.2, 1.0),
            CalibrationPoint::unit(0.2, 0.0),
            CalibrationPoint { score: 0.2, target: 1.0, weight: 2.0 },
            CalibrationPoint::unit(0.7, 1.0),
        ];
        let map = fit_isotonic(&points).unwrap();
        assert_eq!(map.breakpoints(), &[0.2, 0.7]);
        assert!((map.values()[0] - 0.75f64).abs() < 1e-15);
    }

    #[test]
    fn precondition_errors() {
        assert!(matches!(fit_isotonic::<f64>(&[]), Err(CalibrationError::EmptyPool)));
        let unsorted = vec![CalibrationPoint::unit(0.5, 0.0), CalibrationPoint::unit(0.1, 1.0)];
        assert!(matches!(fit_isotonic(&unsorted), Err(CalibrationError::Unsorted)));
        let bad = vec![CalibrationPoint { score: 0.5, target: 0.0, weight: 0.0 }];
        assert!(matches!(fit_isotonic(&bad), Err(CalibrationError::InvalidPoint(_))));
    }

    #[test]
    fn generic_over_f32() {
        let points: Vec<CalibrationPoint<f32>> =
            [0.0f32, 1.0, 0.0].iter().enumerate().map(|(i, &t)| CalibrationPoint::unit(i as f32 * 0.1, t)).collect();
        assert_eq!(fit_isotonic(&points).unwrap().values(), &[0.0f32, 0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(data in prop::collection::vec((0.0f64..1.0, 0.05f64..4.0), 1..=8)) {
            let targets: Vec<f64> = data.iter().map(|d| d.0).collect();
            let weights: Vec<f64> = data.iter().map(|d| d.1).collect();
            let fit = pava(&targets, &weights);
            for (f, o) in fit.iter().zip(brute_force_isotonic(&targets, &weights)) {
                prop_assert!((f - o).abs() < 1e-9);
            }
        }

        #[test]
        fn preserves_weighted_mean(data in prop::collection::vec((0.0f64..1.0, 0.05f64..4.0), 1..200)) {
            let targets: Vec<f64> = data.iter().map(|d| d.0).collect();
            let weights: Vec<f64> = data.iter().map(|d| d.1).collect();
            let fit = pava(&targets, &weights);
            let lhs: f64 = fit.iter().zip(&weights).map(|(f, w)| f * w).sum();
            let rhs: f64 = targets.iter().zip(&weights).map(|(y, w)| y * w).sum();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            prop_assert!(fit.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
