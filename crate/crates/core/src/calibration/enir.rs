//! Nearly-isotonic regression solution path and its BIC-weighted ensemble.
//!
//! The path solves, for every penalty `λ ≥ 0`,
//!
//! ```text
//! minimize  ½ Σ w_i (y_i - b_i)²  +  λ Σ max(b_i - b_{i+1}, 0)
//! ```
//!
//! At `λ = 0` the fit is the data; once `λ` is large enough no adjacent
//! pair is decreasing and the fit is the isotonic regression. In between the
//! fit is piecewise constant on contiguous groups, and a group's value is
//! linear in `λ`:
//!
//! ```text
//! b_g(λ) = (S_g + λ (L_g - R_g)) / W_g
//! ```
//!
//! where `S_g`, `W_g` are the group's weighted target sum and total weight,
//! and `L_g` (`R_g`) is 1 when the group sits below its left neighbour
//! (above its right neighbour). Groups only ever merge, so the path is traced
//! by jumping from one collision of adjacent groups to the next.

use serde::{Deserialize, Serialize};

use super::isotonic::pool_ties;
use super::{validate_points, Calibrate, CalibrationMap, CalibrationPoint, Interpolation, Result};
use crate::Scalar;

/// Fitted values at a breakpoint of the penalty path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathKnot<T> {
    pub lambda: T,
    pub fitted: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearlyIsotonicPath<T> {
    knots: Vec<PathKnot<T>>,
}

impl<T: Scalar> NearlyIsotonicPath<T> {
    /// Knots in increasing `λ`; the first is `λ = 0`, the last is isotonic.
    pub fn knots(&self) -> &[PathKnot<T>] {
        &self.knots
    }

    /// Penalty at which the fit becomes isotonic.
    pub fn max_lambda(&self) -> T {
        self.knots.last().expect("path has a knot").lambda
    }

    /// Fit at an arbitrary penalty, interpolating linearly between knots.
    pub fn solution_at(&self, lambda: T) -> Vec<T> {
        let k = &self.knots;
        let hi = k.partition_point(|kn| kn.lambda <= lambda);
        if hi == 0 {
            return k[0].fitted.clone();
        }
        if hi == k.len() {
            return k[hi - 1].fitted.clone();
        }
        let (a, b) = (&k[hi - 1], &k[hi]);
        let t = (lambda - a.lambda) / (b.lambda - a.lambda);
        a.fitted.iter().zip(&b.fitted).map(|(&x, &y)| x + t * (y - x)).collect()
    }
}

struct Group<T> {
    len: usize,
    sum_wy: T,
    sum_w: T,
}

fn group_values<T: Scalar>(groups: &[Group<T>], violating: &[bool], lambda: T) -> (Vec<T>, Vec<T>) {
    let last = groups.len() - 1;
    groups
        .iter()
        .enumerate()
        .map(|(g, grp)| {
            let l = if g > 0 && violating[g - 1] { T::one() } else { T::zero() };
            let r = if g < last && violating[g] { T::one() } else { T::zero() };
            ((grp.sum_wy + lambda * (l - r)) / grp.sum_w, (l - r) / grp.sum_w)
        })
        .unzip()
}

fn expand<T: Scalar>(groups: &[Group<T>], values: &[T]) -> Vec<T> {
    groups.iter().zip(values).flat_map(|(g, &v)| std::iter::repeat_n(v, g.len)).collect()
}

/// Traces the full nearly-isotonic path for already-ordered observations.
pub fn nearly_isotonic_path<T: Scalar>(targets: &[T], weights: &[T]) -> NearlyIsotonicPath<T> {
    assert_eq!(targets.len(), weights.len());
    assert!(!targets.is_empty(), "path needs at least one observation");
    let mut groups: Vec<Group<T>> =
        targets.iter().zip(weights).map(|(&y, &w)| Group { len: 1, sum_wy: w * y, sum_w: w }).collect();
    // violating[p]: group p sits above group p + 1
    let mut violating: Vec<bool> = targets.windows(2).map(|w| w[0] > w[1]).collect();
    let mut lambda = T::zero();
    let mut knots = vec![PathKnot { lambda, fitted: targets.to_vec() }];
    let tiny = T::lit(1e-12);

    while groups.len() > 1 {
        let (values, slopes) = group_values(&groups, &violating, lambda);
        // time until each adjacent pair collides
        let hits: Vec<Option<T>> = (0..groups.len() - 1)
            .map(|p| {
                let gap = values[p + 1] - values[p];
                let rate = slopes[p + 1] - slopes[p];
                if violating[p] && rate > T::zero() {
                    Some((-gap / rate).max(T::zero()))
                } else if !violating[p] && rate < T::zero() {
                    Some((gap / -rate).max(T::zero()))
                } else {
                    None
                }
            })
            .collect();
        let Some(step) = hits.iter().flatten().copied().reduce(T::min) else {
            break;
        };
        lambda += step;
        let cutoff = step + tiny * (T::one() + lambda);
        for p in (0..hits.len()).rev() {
            if hits[p].is_some_and(|h| h <= cutoff) {
                let right = groups.remove(p + 1);
                let left = &mut groups[p];
                left.len += right.len;
                left.sum_wy += right.sum_wy;
                left.sum_w += right.sum_w;
                violating.remove(p);
            }
        }
        let (values, _) = group_values(&groups, &violating, lambda);
        let knot = PathKnot { lambda, fitted: expand(&groups, &values) };
        match knots.last_mut() {
            Some(prev) if prev.lambda == lambda => *prev = knot,
            _ => knots.push(knot),
        }
    }
    if let Some(last) = knots.last_mut() {
        // no violations remain: each group sits at its weighted mean
        let means: Vec<T> = groups.iter().map(|g| g.sum_wy / g.sum_w).collect();
        if violating.iter().all(|v| !v) {
            last.fitted = expand(&groups, &means);
        }
    }
    NearlyIsotonicPath { knots }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnirMember<T> {
    pub map: CalibrationMap<T>,
    pub lambda: T,
    pub bic: T,
    pub weight: T,
}

/// Ensemble of nearly-isotonic calibration maps, one per path knot,
/// weighted by `exp(-BIC / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnirEnsemble<T> {
    members: Vec<EnirMember<T>>,
}

impl<T: Scalar> EnirEnsemble<T> {
    pub fn members(&self) -> &[EnirMember<T>] {
        &self.members
    }
}

impl<T: Scalar> Calibrate<T> for EnirEnsemble<T> {
    fn map_score(&self, score: T) -> T {
        self.members.iter().map(|m| m.weight * m.map.map_score(score)).sum()
    }
}

const LIKELIHOOD_CLAMP: f64 = 1e-6;

/// BIC of a fit under a Bernoulli likelihood of the targets.
///
/// Weights are rescaled to sum to the number of points, so `n` in the
/// penalty and the likelihood count the same observations. Model size is
/// the number of distinct fitted levels.
fn bic<T: Scalar>(targets: &[T], weights: &[T], fitted: &[T]) -> T {
    let n = T::from_usize_lossy(targets.len());
    let total: T = weights.iter().copied().sum();
    let (lo, hi) = (T::lit(LIKELIHOOD_CLAMP), T::one() - T::lit(LIKELIHOOD_CLAMP));
    let log_lik: T = targets
        .iter()
        .zip(weights)
        .zip(fitted)
        .map(|((&t, &w), &f)| {
            let p = f.max(lo).min(hi);
            w * n / total * (t * p.ln() + (T::one() - t) * (T::one() - p).ln())
        })
        .sum();
    let mut levels = fitted.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite fit"));
    levels.dedup();
    T::lit(-2.0) * log_lik + T::from_usize_lossy(levels.len()) * n.ln()
}

pub fn fit_enir<T: Scalar>(points: &[CalibrationPoint<T>]) -> Result<EnirEnsemble<T>> {
    fit_enir_with(points, Interpolation::Linear)
}

pub fn fit_enir_with<T: Scalar>(points: &[CalibrationPoint<T>], interpolation: Interpolation) -> Result<EnirEnsemble<T>> {
    validate_points(points)?;
    let pooled = pool_ties(points);
    let scores: Vec<T> = pooled.iter().map(|p| p.score).collect();
    let targets: Vec<T> = pooled.iter().map(|p| p.target).collect();
    let weights: Vec<T> = pooled.iter().map(|p| p.weight).collect();
    let path = nearly_isotonic_path(&targets, &weights);

    let mut members = path
        .knots()
        .iter()
        .map(|knot| {
            let values: Vec<T> = knot.fitted.iter().map(|v| v.max(T::zero()).min(T::one())).collect();
            let bic = bic(&targets, &weights, &values);
            Ok(EnirMember {
                map: CalibrationMap::new(scores.clone(), values, interpolation)?,
                lambda: knot.lambda,
                bic,
                weight: T::zero(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = members.iter().map(|m| m.bic).fold(T::infinity(), T::min);
    for m in &mut members {
        m.weight = (-(m.bic - best) / T::lit(2.0)).exp();
    }
    let total: T = members.iter().map(|m| m.weight).sum();
    for m in &mut members {
        m.weight /= total;
    }
    Ok(EnirEnsemble { members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{apply_calibration, fit_isotonic, pava};
    use crate::selftest::dual_nearly_isotonic;
    use proptest::prelude::*;

    fn pts(targets: &[f64]) -> Vec<CalibrationPoint<f64>> {
        targets.iter().enumerate().map(|(i, &t)| CalibrationPoint::unit(i as f64 / targets.len() as f64, t)).collect()
    }

    #[test]
    fn isotonic_input_collapses_path() {
        let t = [0.0, 0.2, 0.2, 0.5, 0.9];
        let ens = fit_enir(&pts(&t)).unwrap();
        for m in ens.members() {
            assert_eq!(m.map.values(), &t);
        }
        let p = pts(&t);
        for q in &p {
            assert!((apply_calibration(&ens, q.score).unwrap() - q.target).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_is_constant() {
        let ens = fit_enir(&[CalibrationPoint::unit(0.3f64, 0.8)]).unwrap();
        assert_eq!(ens.members().len(), 1);
        for s in [0.0, 0.3, 1.0] {
            assert!((apply_calibration(&ens, s).unwrap() - 0.8).abs() < 1e-15);
        }
    }

    #[test]
    fn decreasing_triple_merges_at_once() {
        let path = nearly_isotonic_path(&[0.9f64, 0.5, 0.1], &[1.0; 3]);
        assert_eq!(path.knots().len(), 2);
        assert!((path.max_lambda() - 0.4).abs() < 1e-12);
        for v in &path.knots()[1].fitted {
            assert!((v - 0.5).abs() < 1e-12);
        }
        let mid = path.solution_at(0.2);
        assert!((mid[0] - 0.7).abs() < 1e-12 && (mid[1] - 0.5).abs() < 1e-12 && (mid[2] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ensemble_weights_and_bounds() {
        let t = [0.1, 0.6, 0.2, 0.8, 0.4, 0.9, 0.7, 1.0];
        let p = pts(&t);
        let ens = fit_enir(&p).unwrap();
        let total: f64 = ens.members().iter().map(|m| m.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(ens.members().iter().all(|m| m.weight > 0.0));
        let last = ens.members().last().unwrap();
        assert!(last.map.is_nondecreasing());
        for s in (0..=50).map(|i| i as f64 / 50.0) {
            let outs: Vec<f64> = ens.members().iter().map(|m| m.map.map_score(s)).collect();
            let v = apply_calibration(&ens, s).unwrap();
            let lo = outs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = outs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn endpoint_is_isotonic(data in prop::collection::vec((0.0f64..1.0, 0.1f64..5.0), 1..60)) {
            let targets: Vec<f64> = data.iter().map(|d| d.0).collect();
            let weights: Vec<f64> = data.iter().map(|d| d.1).collect();
            let path = nearly_isotonic_path(&targets, &weights);
            let end = &path.knots().last().unwrap().fitted;
            for (a, b) in end.iter().zip(pava(&targets, &weights)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert!(path.knots().windows(2).all(|w| w[0].lambda < w[1].lambda));
        }

        #[test]
        fn path_matches_dual_oracle(data in prop::collection::vec((0.0f64..1.0, 0.5f64..3.0), 2..7), frac in 0.0f64..1.3) {
            let targets: Vec<f64> = data.iter().map(|d| d.0).collect();
            let weights: Vec<f64> = data.iter().map(|d| d.1).collect();
            let path = nearly_isotonic_path(&targets, &weights);
            let lambda = frac * path.max_lambda().max(0.05);
            let fit = path.solution_at(lambda);
            let oracle = dual_nearly_isotonic(&targets, &weights, lambda, 20_000);
            for (a, b) in fit.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-7, "{:?} vs {:?} at {}", fit, oracle, lambda);
            }
        }

        #[test]
        fn enir_final_member_equals_isotonic_map(data in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40)) {
            let mut p: Vec<_> = data.iter().map(|&(s, t)| CalibrationPoint::unit(s, t)).collect();
            p.sort_by(|a, b| a.score.partial_cmp(&b.score).unwrap());
            let ens = fit_enir(&p).unwrap();
            let iso = fit_isotonic(&p).unwrap();
            let last = &ens.members().last().unwrap().map;
            for (a, b) in last.values().iter().zip(iso.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
