//! Monte-Carlo generation of calibration data and equal-count grouping.
//!
//! Each round splits the binary training data into a model part and a
//! stratified holdout, fits a fresh classifier on the model part, and scores
//! the holdout. Pooled over rounds this yields many more (score, label)
//! pairs than a single split would. Grouping then collapses runs of
//! consecutive scores into binned points with fractional targets.

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CalibrationError, CalibrationPoint, Result};
use crate::classifiers::{ProbabilisticModel, Trainer};
use crate::dataset::LabeledDataset;
use crate::decomposition::BinaryTask;
use crate::rng;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DggParams {
    /// Pool size to reach when `rounds` is unset.
    pub pool_target: usize,
    /// Fixed number of rounds; overrides `pool_target`.
    pub rounds: Option<usize>,
    /// Fraction of each class held out per round.
    pub holdout_fraction: f64,
    pub group_size: usize,
}

impl Default for DggParams {
    fn default() -> Self {
        Self { pool_target: 2000, rounds: None, holdout_fraction: 0.2, group_size: 20 }
    }
}

impl DggParams {
    fn validate(&self) -> Result<()> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(CalibrationError::InvalidParameter(format!(
                "holdout fraction {} not in (0, 1)",
                self.holdout_fraction
            )));
        }
        if self.rounds == Some(0) || (self.rounds.is_none() && self.pool_target == 0) {
            return Err(CalibrationError::InvalidParameter("need at least one round".into()));
        }
        if self.group_size == 0 {
            return Err(CalibrationError::InvalidParameter("group size must be positive".into()));
        }
        Ok(())
    }

    /// Per-class holdout size: `max(1, round(f · n_c))`, leaving at least
    /// one sample of the class for training.
    pub fn holdout_size(&self, class_size: usize) -> Result<usize> {
        if class_size < 2 {
            return Err(CalibrationError::InsufficientData(format!(
                "a class with {class_size} sample(s) cannot be split"
            )));
        }
        let h = ((self.holdout_fraction * class_size as f64).round() as usize).max(1);
        Ok(h.min(class_size - 1))
    }

    /// Rounds needed given the combined holdout size of one round.
    pub fn rounds_for(&self, holdout_total: usize) -> usize {
        self.rounds.unwrap_or_else(|| self.pool_target.div_ceil(holdout_total.max(1)))
    }
}

/// Generates the ungrouped calibration pool for binary data (`labels` in {0, 1}).
///
/// Round `r` draws its split from stream `[r]` below `seed` and trains with
/// seed `derive_seed(seed, [r, 1])`. Rounds run in parallel and are pooled
/// in round order.
pub fn dgg_generate<T, M>(
    x: ArrayView2<T>,
    labels: &[usize],
    trainer: &M,
    params: &DggParams,
    seed: u64,
) -> Result<Vec<CalibrationPoint<T>>>
where
    T: Scalar,
    M: Trainer<T>,
{
    params.validate()?;
    if x.nrows() != labels.len() {
        return Err(CalibrationError::InvalidParameter(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    let by_class: [Vec<usize>; 2] = [0, 1].map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect());
    if labels.iter().any(|&l| l > 1) {
        return Err(CalibrationError::InvalidParameter("labels must be 0 or 1".into()));
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(CalibrationError::DegenerateTask);
    }
    let holdout = [params.holdout_size(by_class[0].len())?, params.holdout_size(by_class[1].len())?];
    let rounds = params.rounds_for(holdout[0] + holdout[1]);

    let per_round: Vec<Vec<CalibrationPoint<T>>> = (0..rounds)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, &[r as u64]);
            let mut model_idx = Vec::with_capacity(labels.len());
            let mut hold_idx = Vec::with_capacity(holdout[0] + holdout[1]);
            for (members, &h) in by_class.iter().zip(&holdout) {
                let mut shuffled = members.clone();
                shuffled.shuffle(&mut rng);
                hold_idx.extend_from_slice(&shuffled[..h]);
                model_idx.extend_from_slice(&shuffled[h..]);
            }
            model_idx.sort_unstable();
            hold_idx.sort_unstable();
            let model_labels: Vec<usize> = model_idx.iter().map(|&i| labels[i]).collect();
            let model = trainer.fit(x.select(Axis(0), &model_idx).view(), &model_labels, 2, rng::derive_seed(seed, &[r as u64, 1]))?;
            let scores = model.positive_scores(x.select(Axis(0), &hold_idx).view())?;
            Ok(hold_idx
                .iter()
                .zip(scores)
                .map(|(&i, s)| CalibrationPoint::unit(s.max(T::zero()).min(T::one()), T::from_usize_lossy(labels[i])))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_round.into_iter().flatten().collect())
}

/// [`dgg_generate`] on the rows of a binary task.
pub fn dgg_generate_task<T, M>(
    task: &BinaryTask,
    parent: &LabeledDataset<T>,
    trainer: &M,
    params: &DggParams,
    seed: u64,
) -> Result<Vec<CalibrationPoint<T>>>
where
    T: Scalar,
    M: Trainer<T>,
{
    if task.is_degenerate() {
        return Err(CalibrationError::DegenerateTask);
    }
    dgg_generate(task.features(parent).view(), &task.binary_labels, trainer, params, seed)
}

/// Sorts the pool by score and collapses consecutive runs of `group_size`
/// points into one weighted point. The last group may be short.
pub fn dgg_group<T: Scalar>(pool: &[CalibrationPoint<T>], group_size: usize) -> Result<Vec<CalibrationPoint<T>>> {
    if pool.is_empty() {
        return Err(CalibrationError::EmptyPool);
    }
    if group_size == 0 {
        return Err(CalibrationError::InvalidParameter("group size must be positive".into()));
    }
    let mut sorted = pool.to_vec();
    sorted.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .and_then(|o| Some(o.then(a.target.partial_cmp(&b.target)?)))
            .expect("finite calibration points")
    });
    Ok(sorted
        .chunks(group_size)
        .map(|chunk| {
            let w: T = chunk.iter().map(|p| p.weight).sum();
            let score = chunk.iter().map(|p| p.weight * p.score).sum::<T>() / w;
            let target = chunk.iter().map(|p| p.weight * p.target).sum::<T>() / w;
            CalibrationPoint { score, target, weight: w }
        })
        .collect())
}
