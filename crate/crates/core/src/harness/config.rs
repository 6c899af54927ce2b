//! Experiment configuration and data set recipes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, OutputFormat, Scenario};
use crate::calibration::{CalibratorKind, DggParams, Interpolation};
use crate::classifiers::{ClassifierSpec, NbParams, RfParams};
use crate::coupling::CouplingParams;
use crate::dataset::{drop_classes, generate_waveform_with_noise, load_csv, merge_classes, CsvOptions, LabeledDataset};
use crate::stats::TestKind;

/// Parameters of the synthetic Waveform generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSource {
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise_sd: f64,
}

fn default_noise() -> f64 {
    1.0
}

/// How to obtain one data set: a delimited file or the Waveform generator,
/// followed by optional class merging.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetRecipe {
    /// Identifier used in result tables and seed derivation.
    pub name: String,
    /// Data file, relative to the recipe's directory.
    pub path: Option<PathBuf>,
    pub csv: CsvOptions,
    pub waveform: Option<WaveformSource>,
    /// Classes whose samples are discarded before merging.
    pub drop_classes: Vec<String>,
    /// Groups of class names to merge into single classes.
    pub merge: Vec<Vec<String>>,
}

impl DatasetRecipe {
    pub fn from_file(path: &Path) -> Result<(Self, PathBuf), HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let recipe: Self =
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Ok((recipe, path.parent().map(Path::to_path_buf).unwrap_or_default()))
    }

    /// Loads the data, resolving a relative `path` against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<LabeledDataset<f64>, HarnessError> {
        let ds = match (&self.path, &self.waveform) {
            (Some(p), None) => {
                let full = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                let report = load_csv(&full, &self.csv)?;
                if report.dropped_rows > 0 {
                    log::warn!("{}: dropped {} incomplete rows", self.name, report.dropped_rows);
                }
                report.dataset
            }
            (None, Some(w)) => generate_waveform_with_noise(w.n, w.seed, w.noise_sd)?,
            _ => {
                return Err(HarnessError::Config(format!(
                    "data set {:?} needs exactly one of `path` and `waveform`",
                    self.name
                )))
            }
        };
        let ds = if self.drop_classes.is_empty() { ds } else { drop_classes(&ds, &self.drop_classes)? };
        if self.merge.is_empty() {
            Ok(ds)
        } else {
            Ok(merge_classes(&ds, &self.merge)?)
        }
    }
}

/// A recipe given inline or as a path to a recipe file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetEntry {
    File(PathBuf),
    Inline(DatasetRecipe),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetEntry>,
    pub classifiers: Vec<ClassifierSpec>,
    pub scenarios: Vec<Scenario>,
    pub folds: usize,
    pub seed: u64,
    pub dgg: DggParams,
    pub calibrator: CalibratorKind,
    pub interpolation: Interpolation,
    pub coupling: CouplingParams,
    pub test: TestKind,
    pub alpha: f64,
    pub format: OutputFormat,
    /// Run folds and binary tasks on the rayon pool.
    pub parallel: bool,
    /// Directory that relative recipe paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            classifiers: vec![
                ClassifierSpec::NaiveBayes(NbParams::default()),
                ClassifierSpec::RandomForest(RfParams::default()),
            ],
            scenarios: Scenario::ALL.to_vec(),
            folds: 10,
            seed: 0,
            dgg: DggParams::default(),
            calibrator: CalibratorKind::default(),
            interpolation: Interpolation::default(),
            coupling: CouplingParams::default(),
            test: TestKind::default(),
            alpha: 0.05,
            format: OutputFormat::default(),
            parallel: true,
            base_dir: PathBuf::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.folds < 2 {
            return Err(HarnessError::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.scenarios.is_empty() {
            return Err(HarnessError::Config("no scenarios selected".into()));
        }
        if self.classifiers.is_empty() {
            return Err(HarnessError::Config("no classifiers selected".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(HarnessError::Config(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        Ok(())
    }

    /// Resolves every entry to a recipe and the directory its paths are relative to.
    pub fn recipes(&self) -> Vec<Result<(DatasetRecipe, PathBuf), HarnessError>> {
        self.datasets
            .iter()
            .map(|entry| match entry {
                DatasetEntry::Inline(r) => Ok((r.clone(), self.base_dir.clone())),
                DatasetEntry::File(p) => {
                    let full = if p.is_absolute() { p.clone() } else { self.base_dir.join(p) };
                    let (mut recipe, dir) = DatasetRecipe::from_file(&full)?;
                    if recipe.name.is_empty() {
                        recipe.name = full.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    }
                    Ok((recipe, dir))
                }
            })
            .collect()
    }
}
