//! Cross-validated comparison of the five probability scenarios.
//!
//! For every data set and classifier the harness draws one stratified fold
//! plan and evaluates all requested scenarios on the same splits:
//!
//! | scenario | probabilities |
//! |---|---|
//! | multi-class raw | the classifier's own K-class output |
//! | one-vs-rest raw / calibrated | K binary models, normalized |
//! | all-pairs raw / calibrated | K(K-1)/2 binary models, pairwise coupled |
//!
//! Calibrated scenarios pass each binary task's scores through a DGG + ENIR
//! map fitted on the training fold only. All randomness is derived from the
//! master seed and the (data set, classifier, fold, task) path, so results do
//! not depend on thread scheduling.

mod config;
mod table;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{
    apply_calibration, dgg_generate, dgg_group, fit_calibrator, CalibrationError, Calibrator,
};
use crate::classifiers::{ClassifierError, ClassifierSpec, ProbabilisticModel, ProbabilityMatrix, Trainer};
use crate::coupling::{normalize_combine, pairwise_couple, CouplingError, OvrScores, PairwiseEstimates};
use crate::dataset::{stratified_kfold, DatasetError, LabeledDataset};
use crate::decomposition::{build_tasks, BinaryTask, DecompositionError, Scheme};
use crate::metrics::{log_loss, mse, LabelMatrix, MetricsError};
use crate::rng::{derive_seed, hash_str};
use crate::stats::{run_test, StatsError, TestKind, TestResult};
use crate::Scalar;

pub use config::{DatasetEntry, DatasetRecipe, ExperimentConfig, WaveformSource};
pub use table::{emit_table, RenderedTables};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    MultiClassRaw,
    OvrRaw,
    OvrCalibrated,
    AllPairsRaw,
    AllPairsCalibrated,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::MultiClassRaw,
        Scenario::OvrRaw,
        Scenario::OvrCalibrated,
        Scenario::AllPairsRaw,
        Scenario::AllPairsCalibrated,
    ];

    /// Machine name, as used in configuration and CSV headers.
    pub fn name(self) -> &'static str {
        match self {
            Scenario::MultiClassRaw => "multi_class_raw",
            Scenario::OvrRaw => "ovr_raw",
            Scenario::OvrCalibrated => "ovr_calibrated",
            Scenario::AllPairsRaw => "all_pairs_raw",
            Scenario::AllPairsCalibrated => "all_pairs_calibrated",
        }
    }

    /// Human-readable column title.
    pub fn title(self) -> &'static str {
        match self {
            Scenario::MultiClassRaw => "Multi-class Raw",
            Scenario::OvrRaw => "One-vs-rest Raw",
            Scenario::OvrCalibrated => "One-vs-rest DGG+ENIR",
            Scenario::AllPairsRaw => "All pairs Raw",
            Scenario::AllPairsCalibrated => "All pairs DGG+ENIR",
        }
    }

    pub fn scheme(self) -> Option<Scheme> {
        match self {
            Scenario::MultiClassRaw => None,
            Scenario::OvrRaw | Scenario::OvrCalibrated => Some(Scheme::OneVsRest),
            Scenario::AllPairsRaw | Scenario::AllPairsCalibrated => Some(Scheme::AllPairs),
        }
    }

    pub fn is_calibrated(self) -> bool {
        matches!(self, Scenario::OvrCalibrated | Scenario::AllPairsCalibrated)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = HarnessError;

    /// Accepts the machine name in any case, with `-` or `_` or no separators.
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().replace('_', "") == key)
            .ok_or_else(|| HarnessError::Config(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "json" => Ok(OutputFormat::Json),
            _ => Err(HarnessError::UnsupportedFormat(s.to_string())),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Markdown => "md",
            OutputFormat::Json => "json",
        }
    }
}

/// Failure inside one stage of a fold.
#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("unsupported output format {0:?}")]
    UnsupportedFormat(String),
    #[error("nothing to emit: the result bundle is empty")]
    EmptyBundle,
    #[error("fold {}, task {}: {source}", fmt_opt(.fold), fmt_opt(.task))]
    Stage {
        fold: Option<usize>,
        task: Option<usize>,
        #[source]
        source: StageError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn fmt_opt(v: &Option<usize>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn stage<E: Into<StageError>>(task: Option<usize>) -> impl FnOnce(E) -> HarnessError {
    move |e| HarnessError::Stage { fold: None, task, source: e.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mse,
    LogLoss,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Mse, Metric::LogLoss];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::LogLoss => "ll",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::Mse => "Mean squared error",
            Metric::LogLoss => "Log loss",
        }
    }
}

/// Per-fold outcomes of one scenario on one (data set, classifier) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub dataset: String,
    pub classifier: String,
    pub scenario: Scenario,
    pub mse: Vec<f64>,
    pub log_loss: Vec<f64>,
    /// Seconds spent fitting the classifier(s) the scenario scores with.
    pub fit_seconds: Vec<f64>,
    /// Seconds spent generating calibration data and fitting and applying maps.
    pub calibration_seconds: Vec<f64>,
    /// `calibration_seconds` divided by the number of binary tasks.
    pub calibration_seconds_per_task: Vec<f64>,
    pub binary_tasks: usize,
    /// Tasks replaced by a constant-prior predictor, summed over folds.
    pub degenerate_tasks: usize,
    /// Tasks left uncalibrated because a class was too small to split, summed over folds.
    pub uncalibrated_tasks: usize,
    /// Test rows whose pairwise coupling hit the iteration cap, summed over folds.
    pub nonconverged_rows: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl ScenarioResult {
    pub fn values(&self, metric: Metric) -> &[f64] {
        match metric {
            Metric::Mse => &self.mse,
            Metric::LogLoss => &self.log_loss,
        }
    }

    pub fn mean(&self, metric: Metric) -> f64 {
        mean(self.values(metric))
    }

    pub fn mean_fit_seconds(&self) -> f64 {
        mean(&self.fit_seconds)
    }

    pub fn mean_calibration_seconds(&self) -> f64 {
        mean(&self.calibration_seconds)
    }

    pub fn mean_calibration_seconds_per_task(&self) -> f64 {
        mean(&self.calibration_seconds_per_task)
    }
}

/// A scenario tested against multi-class raw on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dataset: String,
    pub classifier: String,
    pub scenario: Scenario,
    pub metric: Metric,
    pub result: TestResult<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFailure {
    pub dataset: String,
    pub classifier: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub test: TestKind,
    pub alpha: f64,
    pub folds: usize,
    pub seed: u64,
    pub results: Vec<ScenarioResult>,
    pub comparisons: Vec<Comparison>,
    pub failures: Vec<DatasetFailure>,
}

impl ExperimentResults {
    pub fn result(&self, dataset: &str, classifier: &str, scenario: Scenario) -> Option<&ScenarioResult> {
        self.results.iter().find(|r| r.dataset == dataset && r.classifier == classifier && r.scenario == scenario)
    }

    pub fn comparison(&self, dataset: &str, classifier: &str, scenario: Scenario, metric: Metric) -> Option<&TestResult<f64>> {
        self.comparisons
            .iter()
            .find(|c| c.dataset == dataset && c.classifier == classifier && c.scenario == scenario && c.metric == metric)
            .map(|c| &c.result)
    }
}

/// Probabilities and bookkeeping for one scenario on one train/test split.
#[derive(Debug, Clone)]
pub struct ScenarioPrediction<T> {
    pub scenario: Scenario,
    pub probabilities: ProbabilityMatrix<T>,
    pub fit_seconds: f64,
    pub calibration_seconds: f64,
    pub binary_tasks: usize,
    pub degenerate_tasks: usize,
    pub uncalibrated_tasks: usize,
    pub nonconverged_rows: usize,
}

fn par_map<R: Send>(parallel: bool, n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

struct TaskOutput<T> {
    raw: Vec<T>,
    calibrated: Option<Vec<T>>,
    fit_seconds: f64,
    calibration_seconds: f64,
    degenerate: bool,
    uncalibrated: bool,
}

/// Fits the calibrator for one binary task from DGG data on its training rows.
fn calibrate_task<T: Scalar>(
    x: ArrayView2<T>,
    labels: &[usize],
    classifier: &ClassifierSpec,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Calibrator<T>, CalibrationError> {
    let pool = dgg_generate(x, labels, classifier, &cfg.dgg, seed)?;
    let grouped = dgg_group(&pool, cfg.dgg.group_size)?;
    fit_calibrator(cfg.calibrator, &grouped, cfg.interpolation)
}

fn run_task<T: Scalar>(
    task: &BinaryTask,
    train: &LabeledDataset<T>,
    test_x: ArrayView2<T>,
    classifier: &ClassifierSpec,
    calibrate: bool,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TaskOutput<T>, StageError> {
    if task.is_degenerate() {
        // constant positive prior; an empty pair task has no prior to use
        let prior = if task.is_empty() { 0.5 } else { task.positive_prior() };
        log::debug!("degenerate task (positive class {}): constant {prior}", task.positive_class);
        let raw = vec![T::lit(prior); test_x.nrows()];
        return Ok(TaskOutput {
            calibrated: calibrate.then(|| raw.clone()),
            raw,
            fit_seconds: 0.0,
            calibration_seconds: 0.0,
            degenerate: true,
            uncalibrated: false,
        });
    }
    let x = task.features(train);
    let start = Instant::now();
    let model = classifier.fit(x.view(), &task.binary_labels, 2, seed)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let raw: Vec<T> = model.positive_scores(test_x)?.into_iter().map(|s| s.max(T::zero()).min(T::one())).collect();
    if !calibrate {
        return Ok(TaskOutput { raw, calibrated: None, fit_seconds, calibration_seconds: 0.0, degenerate: false, uncalibrated: false });
    }

    let start = Instant::now();
    let (calibrated, uncalibrated) =
        match calibrate_task(x.view(), &task.binary_labels, classifier, cfg, derive_seed(seed, &[hash_str("dgg")])) {
            Ok(cal) => (raw.iter().map(|&s| apply_calibration(&cal, s)).collect::<Result<Vec<T>, _>>()?, false),
            Err(CalibrationError::InsufficientData(msg)) => {
                log::warn!("task with positive class {} left uncalibrated: {msg}", task.positive_class);
                (raw.clone(), true)
            }
            Err(e) => return Err(e.into()),
        };
    let calibration_seconds = start.elapsed().as_secs_f64();
    Ok(TaskOutput { raw, calibrated: Some(calibrated), fit_seconds, calibration_seconds, degenerate: false, uncalibrated })
}

/// Combines per-task positive scores into K-class rows.
fn combine<T: Scalar>(
    scheme: Scheme,
    n_classes: usize,
    tasks: &[BinaryTask],
    scores: &[&[T]],
    n_rows: usize,
    cfg: &ExperimentConfig,
) -> Result<(Array2<T>, usize), StageError> {
    let mut out = Array2::zeros((n_rows, n_classes));
    let mut nonconverged = 0;
    for i in 0..n_rows {
        let row = match scheme {
            Scheme::OneVsRest => {
                let mut s = vec![T::zero(); n_classes];
                for (task, sc) in tasks.iter().zip(scores) {
                    s[task.positive_class] = sc[i];
                }
                normalize_combine(&OvrScores::new(s)?)
            }
            Scheme::AllPairs => {
                let mut r = Array2::from_elem((n_classes, n_classes), T::lit(0.5));
                for (task, sc) in tasks.iter().zip(scores) {
                    let (a, b) = (task.positive_class, task.negative_classes[0]);
                    r[[a, b]] = sc[i];
                    r[[b, a]] = T::one() - sc[i];
                }
                let coupled = pairwise_couple(&PairwiseEstimates::new(r)?, &cfg.coupling)?;
                if !coupled.converged {
                    nonconverged += 1;
                }
                coupled.probabilities
            }
        };
        out.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    Ok((out, nonconverged))
}

/// Multi-class fit; classes absent from the training fold get probability 0.
fn multiclass_raw<T: Scalar>(
    train: &LabeledDataset<T>,
    test_x: ArrayView2<T>,
    classifier: &ClassifierSpec,
    seed: u64,
) -> Result<(Array2<T>, f64), StageError> {
    let k = train.n_classes();
    let present: Vec<usize> = train.class_counts().iter().enumerate().filter(|(_, &c)| c > 0).map(|(c, _)| c).collect();
    let start = Instant::now();
    if present.len() == 1 {
        let mut p = Array2::zeros((test_x.nrows(), k));
        p.column_mut(present[0]).fill(T::one());
        return Ok((p, start.elapsed().as_secs_f64()));
    }
    if present.len() == k {
        let model = classifier.fit(train.features().view(), train.labels(), k, seed)?;
        let fit = start.elapsed().as_secs_f64();
        return Ok((model.predict_proba(test_x)?.into_inner(), fit));
    }
    let mut dense = vec![usize::MAX; k];
    for (i, &c) in present.iter().enumerate() {
        dense[c] = i;
    }
    let labels: Vec<usize> = train.labels().iter().map(|&l| dense[l]).collect();
    let model = classifier.fit(train.features().view(), &labels, present.len(), seed)?;
    let fit = start.elapsed().as_secs_f64();
    let sub = model.predict_proba(test_x)?;
    let mut p = Array2::zeros((test_x.nrows(), k));
    for (i, &c) in present.iter().enumerate() {
        p.column_mut(c).assign(&sub.values().column(i));
    }
    Ok((p, fit))
}

fn scheme_code(scheme: Scheme) -> u64 {
    match scheme {
        Scheme::OneVsRest => 1,
        Scheme::AllPairs => 2,
    }
}

/// Trains on `train` and predicts `test_x` under each requested scenario.
///
/// Raw and calibrated variants of a scheme share the same binary models, so
/// requesting both costs one set of fits. Model seeds derive from `seed`.
pub fn predict_scenarios<T: Scalar>(
    train: &LabeledDataset<T>,
    test_x: ArrayView2<T>,
    classifier: &ClassifierSpec,
    scenarios: &[Scenario],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<ScenarioPrediction<T>>, HarnessError> {
    let k = train.n_classes();
    let n = test_x.nrows();
    let mut out = Vec::new();
    for &scenario in scenarios {
        if out.iter().any(|p: &ScenarioPrediction<T>| p.scenario == scenario) {
            continue;
        }
        let Some(scheme) = scenario.scheme() else {
            let (p, fit) = multiclass_raw(train, test_x, classifier, derive_seed(seed, &[0])).map_err(stage(None))?;
            out.push(ScenarioPrediction {
                scenario,
                probabilities: ProbabilityMatrix::new(p).map_err(stage(None))?,
                fit_seconds: fit,
                calibration_seconds: 0.0,
                binary_tasks: 0,
                degenerate_tasks: 0,
                uncalibrated_tasks: 0,
                nonconverged_rows: 0,
            });
            continue;
        };
        let mut siblings: Vec<Scenario> = scenarios.iter().copied().filter(|s| s.scheme() == Some(scheme)).collect();
        siblings.sort_unstable();
        siblings.dedup();
        let calibrate = siblings.iter().any(|s| s.is_calibrated());
        let tasks = build_tasks(train, scheme).map_err(stage(None))?;
        let outputs = par_map(cfg.parallel, tasks.len(), |t| {
            run_task(&tasks[t], train, test_x, classifier, calibrate, cfg, derive_seed(seed, &[scheme_code(scheme), t as u64]))
                .map_err(stage(Some(t)))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

        let fit_seconds: f64 = outputs.iter().map(|o| o.fit_seconds).sum();
        let degenerate = outputs.iter().filter(|o| o.degenerate).count();
        for sc in siblings {
            let scores: Vec<&[T]> = outputs
                .iter()
                .map(|o| if sc.is_calibrated() { o.calibrated.as_deref().expect("calibrated") } else { &o.raw[..] })
                .collect();
            let (p, nonconverged) = combine(scheme, k, &tasks, &scores, n, cfg).map_err(stage(None))?;
            let (calibration_seconds, uncalibrated) = if sc.is_calibrated() {
                (outputs.iter().map(|o| o.calibration_seconds).sum(), outputs.iter().filter(|o| o.uncalibrated).count())
            } else {
                (0.0, 0)
            };
            out.push(ScenarioPrediction {
                scenario: sc,
                probabilities: ProbabilityMatrix::new(p).map_err(stage(None))?,
                fit_seconds,
                calibration_seconds,
                binary_tasks: tasks.len(),
                degenerate_tasks: degenerate,
                uncalibrated_tasks: uncalibrated,
                nonconverged_rows: nonconverged,
            });
        }
    }
    // report in the requested order
    let mut ordered = Vec::with_capacity(out.len());
    for s in scenarios {
        if let Some(pos) = out.iter().position(|p| p.scenario == *s) {
            ordered.push(out.swap_remove(pos));
        }
    }
    Ok(ordered)
}

struct FoldScore {
    mse: f64,
    log_loss: f64,
    fit_seconds: f64,
    calibration_seconds: f64,
    binary_tasks: usize,
    degenerate_tasks: usize,
    uncalibrated_tasks: usize,
    nonconverged_rows: usize,
}

/// Runs the requested scenarios over all folds of one (data set, classifier) pair.
pub fn run_scenarios<T: Scalar>(
    dataset_id: &str,
    ds: &LabeledDataset<T>,
    classifier: &ClassifierSpec,
    scenarios: &[Scenario],
    cfg: &ExperimentConfig,
) -> Result<Vec<ScenarioResult>, HarnessError> {
    cfg.validate()?;
    let mut unique: Vec<Scenario> = Vec::new();
    for &s in scenarios {
        if !unique.contains(&s) {
            unique.push(s);
        }
    }
    let dataset_key = hash_str(dataset_id);
    let plan = stratified_kfold(ds, cfg.folds, derive_seed(cfg.seed, &[dataset_key]))?;
    let k = ds.n_classes();

    let per_fold = par_map(cfg.parallel, cfg.folds, |fold| -> Result<Vec<FoldScore>, HarnessError> {
        let train_idx = plan.train_indices(fold);
        let test_idx = plan.test_indices(fold);
        debug_assert!(test_idx.iter().all(|i| train_idx.binary_search(i).is_err()), "test rows leaked into training");
        let train = ds.subset(&train_idx);
        let test = ds.subset(&test_idx);
        let y = LabelMatrix::from_labels(test.labels(), k).map_err(|e| HarnessError::Stage {
            fold: Some(fold),
            task: None,
            source: e.into(),
        })?;
        let seed = derive_seed(cfg.seed, &[dataset_key, hash_str(classifier.id()), fold as u64]);
        let preds = predict_scenarios(&train, test.features().view(), classifier, &unique, cfg, seed).map_err(|e| match e {
            HarnessError::Stage { task, source, .. } => HarnessError::Stage { fold: Some(fold), task, source },
            other => other,
        })?;
        preds
            .into_iter()
            .map(|p| {
                let at_fold = |e: MetricsError| HarnessError::Stage { fold: Some(fold), task: None, source: e.into() };
                Ok(FoldScore {
                    mse: mse(&p.probabilities, &y).map_err(at_fold)?.as_f64(),
                    log_loss: log_loss(&p.probabilities, &y).map_err(at_fold)?.as_f64(),
                    fit_seconds: p.fit_seconds,
                    calibration_seconds: p.calibration_seconds,
                    binary_tasks: p.binary_tasks,
                    degenerate_tasks: p.degenerate_tasks,
                    uncalibrated_tasks: p.uncalibrated_tasks,
                    nonconverged_rows: p.nonconverged_rows,
                })
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    Ok(unique
        .iter()
        .enumerate()
        .map(|(s, &scenario)| {
            let folds: Vec<&FoldScore> = per_fold.iter().map(|f| &f[s]).collect();
            ScenarioResult {
                dataset: dataset_id.to_string(),
                classifier: classifier.id().to_string(),
                scenario,
                mse: folds.iter().map(|f| f.mse).collect(),
                log_loss: folds.iter().map(|f| f.log_loss).collect(),
                fit_seconds: folds.iter().map(|f| f.fit_seconds).collect(),
                calibration_seconds: folds.iter().map(|f| f.calibration_seconds).collect(),
                calibration_seconds_per_task: folds
                    .iter()
                    .map(|f| if f.binary_tasks > 0 { f.calibration_seconds / f.binary_tasks as f64 } else { 0.0 })
                    .collect(),
                binary_tasks: folds[0].binary_tasks,
                degenerate_tasks: folds.iter().map(|f| f.degenerate_tasks).sum(),
                uncalibrated_tasks: folds.iter().map(|f| f.uncalibrated_tasks).sum(),
                nonconverged_rows: folds.iter().map(|f| f.nonconverged_rows).sum(),
            }
        })
        .collect())
}

/// One scenario over all folds.
pub fn run_scenario<T: Scalar>(
    dataset_id: &str,
    ds: &LabeledDataset<T>,
    classifier: &ClassifierSpec,
    scenario: Scenario,
    cfg: &ExperimentConfig,
) -> Result<ScenarioResult, HarnessError> {
    Ok(run_scenarios(dataset_id, ds, classifier, &[scenario], cfg)?.remove(0))
}

/// Tests every scenario of each (data set, classifier) pair against its
/// multi-class raw baseline, including the baseline itself.
pub fn compare_to_baseline(results: &[ScenarioResult], test: TestKind, alpha: f64) -> Result<Vec<Comparison>, HarnessError> {
    let mut out = Vec::new();
    for r in results {
        let Some(base) = results.iter().find(|b| {
            b.dataset == r.dataset && b.classifier == r.classifier && b.scenario == Scenario::MultiClassRaw
        }) else {
            continue;
        };
        for metric in Metric::ALL {
            out.push(Comparison {
                dataset: r.dataset.clone(),
                classifier: r.classifier.clone(),
                scenario: r.scenario,
                metric,
                result: run_test(test, r.values(metric), base.values(metric), alpha)?,
            });
        }
    }
    Ok(out)
}

/// Runs every data set × classifier × scenario in the configuration.
///
/// A data set that fails to load or run is recorded in `failures` and the
/// run continues with the next one.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults, HarnessError> {
    cfg.validate()?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (i, entry) in cfg.recipes().into_iter().enumerate() {
        let (recipe, dir) = match entry {
            Ok(r) => r,
            Err(e) => {
                failures.push(DatasetFailure { dataset: format!("#{i}"), classifier: None, error: e.to_string() });
                continue;
            }
        };
        let ds = match recipe.load(&dir) {
            Ok(ds) => ds,
            Err(e) => {
                log::error!("{}: {e}", recipe.name);
                failures.push(DatasetFailure { dataset: recipe.name.clone(), classifier: None, error: e.to_string() });
                continue;
            }
        };
        log::info!("{}: {} samples, {} features, {} classes", recipe.name, ds.n_samples(), ds.n_features(), ds.n_classes());
        for classifier in &cfg.classifiers {
            match run_scenarios(&recipe.name, &ds, classifier, &cfg.scenarios, cfg) {
                Ok(r) => results.extend(r),
                Err(e) => {
                    log::error!("{} / {}: {e}", recipe.name, classifier.id());
                    failures.push(DatasetFailure {
                        dataset: recipe.name.clone(),
                        classifier: Some(classifier.id().to_string()),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    let comparisons = compare_to_baseline(&results, cfg.test, cfg.alpha)?;
    Ok(ExperimentResults { test: cfg.test, alpha: cfg.alpha, folds: cfg.folds, seed: cfg.seed, results, comparisons, failures })
}

#[cfg(test)]
mod tests;
