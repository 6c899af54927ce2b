//! Rendering of result bundles as CSV, markdown or JSON.
//!
//! Metrics and timings go to separate documents. The metrics document is a
//! pure function of the configuration and seed; the timings document holds
//! wall-clock measurements and differs from run to run.

use serde::Serialize;

use super::{ExperimentResults, HarnessError, Metric, OutputFormat, Scenario, ScenarioResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedTables {
    pub metrics: String,
    pub timings: String,
}

#[derive(Debug, Clone, Serialize)]
struct Cell {
    mean: f64,
    /// Against multi-class raw; absent when that scenario was not run.
    p_value: Option<f64>,
    significant: bool,
    best: bool,
    folds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct ScenarioCells {
    scenario: Scenario,
    mse: Cell,
    log_loss: Cell,
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    dataset: String,
    classifier: String,
    scenarios: Vec<ScenarioCells>,
}

#[derive(Debug, Clone, Serialize)]
struct TimingRow {
    dataset: String,
    classifier: String,
    scenario: Scenario,
    binary_tasks: usize,
    fit_seconds: f64,
    calibration_seconds: f64,
    calibration_seconds_per_task: f64,
    degenerate_tasks: usize,
    uncalibrated_tasks: usize,
}

#[derive(Serialize)]
struct MetricsDoc<'a> {
    test: &'a str,
    alpha: f64,
    folds: usize,
    seed: u64,
    rows: &'a [Row],
    failures: &'a [super::DatasetFailure],
}

fn scenarios_present(bundle: &ExperimentResults) -> Vec<Scenario> {
    Scenario::ALL.into_iter().filter(|s| bundle.results.iter().any(|r| r.scenario == *s)).collect()
}

fn rows(bundle: &ExperimentResults) -> Vec<Row> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in &bundle.results {
        let key = (r.dataset.as_str(), r.classifier.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(dataset, classifier)| {
            let members: Vec<&ScenarioResult> = Scenario::ALL
                .iter()
                .filter_map(|&s| bundle.result(dataset, classifier, s))
                .collect();
            let best = |metric: Metric| {
                // first scenario wins ties
                members.iter().enumerate().fold((usize::MAX, f64::INFINITY), |acc, (i, r)| {
                    let m = r.mean(metric);
                    if m < acc.1 {
                        (i, m)
                    } else {
                        acc
                    }
                }).0
            };
            let (best_mse, best_ll) = (best(Metric::Mse), best(Metric::LogLoss));
            let cell = |r: &ScenarioResult, metric: Metric, is_best: bool| {
                let test = bundle.comparison(dataset, classifier, r.scenario, metric);
                Cell {
                    mean: r.mean(metric),
                    p_value: test.map(|t| t.p_value),
                    significant: r.scenario != Scenario::MultiClassRaw && test.is_some_and(|t| t.significant),
                    best: is_best,
                    folds: r.values(metric).to_vec(),
                }
            };
            Row {
                dataset: dataset.to_string(),
                classifier: classifier.to_string(),
                scenarios: members
                    .iter()
                    .enumerate()
                    .map(|(i, r)| ScenarioCells {
                        scenario: r.scenario,
                        mse: cell(r, Metric::Mse, i == best_mse),
                        log_loss: cell(r, Metric::LogLoss, i == best_ll),
                    })
                    .collect(),
            }
        })
        .collect()
}

fn timing_rows(bundle: &ExperimentResults) -> Vec<TimingRow> {
    bundle
        .results
        .iter()
        .map(|r| TimingRow {
            dataset: r.dataset.clone(),
            classifier: r.classifier.clone(),
            scenario: r.scenario,
            binary_tasks: r.binary_tasks,
            fit_seconds: r.mean_fit_seconds(),
            calibration_seconds: r.mean_calibration_seconds(),
            calibration_seconds_per_task: r.mean_calibration_seconds_per_task(),
            degenerate_tasks: r.degenerate_tasks,
            uncalibrated_tasks: r.uncalibrated_tasks,
        })
        .collect()
}

fn get<'a>(row: &'a Row, s: Scenario) -> Option<&'a ScenarioCells> {
    row.scenarios.iter().find(|c| c.scenario == s)
}

fn metric_cell(c: &ScenarioCells, metric: Metric) -> &Cell {
    match metric {
        Metric::Mse => &c.mse,
        Metric::LogLoss => &c.log_loss,
    }
}

fn csv_error(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("csv output: {e}"))
}

fn metrics_csv(bundle: &ExperimentResults, rows: &[Row]) -> Result<String, HarnessError> {
    let scenarios = scenarios_present(bundle);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["dataset".to_string(), "classifier".into(), "test".into(), "alpha".into()];
    for s in &scenarios {
        for m in Metric::ALL {
            for suffix in ["", "_p", "_sig", "_best"] {
                header.push(format!("{}_{}{}", s.name(), m.name(), suffix));
            }
        }
    }
    w.write_record(&header).map_err(csv_error)?;
    for row in rows {
        let mut rec = vec![row.dataset.clone(), row.classifier.clone(), bundle.test.name().into(), bundle.alpha.to_string()];
        for &s in &scenarios {
            for m in Metric::ALL {
                match get(row, s).map(|c| metric_cell(c, m)) {
                    Some(cell) => {
                        rec.push(format!("{:.6}", cell.mean));
                        rec.push(cell.p_value.map(|p| format!("{p:.6e}")).unwrap_or_default());
                        rec.push(u8::from(cell.significant).to_string());
                        rec.push(u8::from(cell.best).to_string());
                    }
                    None => rec.extend(std::iter::repeat_n(String::new(), 4)),
                }
            }
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}

fn timings_csv(timings: &[TimingRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "classifier",
        "scenario",
        "binary_tasks",
        "fit_seconds",
        "calibration_seconds",
        "calibration_seconds_per_task",
        "degenerate_tasks",
        "uncalibrated_tasks",
    ])
    .map_err(csv_error)?;
    for t in timings {
        w.write_record([
            t.dataset.clone(),
            t.classifier.clone(),
            t.scenario.name().to_string(),
            t.binary_tasks.to_string(),
            format!("{:.6}", t.fit_seconds),
            format!("{:.6}", t.calibration_seconds),
            format!("{:.6}", t.calibration_seconds_per_task),
            t.degenerate_tasks.to_string(),
            t.uncalibrated_tasks.to_string(),
        ])
        .map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}

fn metrics_markdown(bundle: &ExperimentResults, rows: &[Row]) -> String {
    let scenarios = scenarios_present(bundle);
    let mut out = String::new();
    for metric in Metric::ALL {
        out.push_str(&format!("### {}\n\n| Dataset | Classifier |", metric.title()));
        for s in &scenarios {
            out.push_str(&format!(" {} |", s.title()));
        }
        out.push_str("\n|---|---|");
        out.push_str(&"---:|".repeat(scenarios.len()));
        out.push('\n');
        for row in rows {
            out.push_str(&format!("| {} | {} |", row.dataset, row.classifier));
            for &s in &scenarios {
                let text = get(row, s).map(|c| metric_cell(c, metric)).map_or_else(String::new, |cell| {
                    let v = format!("{:.4}", cell.mean);
                    let v = if cell.best { format!("**{v}**") } else { v };
                    if cell.significant {
                        format!("{v}\\*")
                    } else {
                        v
                    }
                });
                out.push_str(&format!(" {text} |"));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "Bold: lowest mean in the row. \\*: differs from {} ({} t-test, alpha = {}, {} folds).\n",
        Scenario::MultiClassRaw.title(),
        bundle.test.name(),
        bundle.alpha,
        bundle.folds
    ));
    if !bundle.failures.is_empty() {
        out.push_str("\nFailed:\n\n");
        for f in &bundle.failures {
            let who = f.classifier.as_ref().map_or_else(|| f.dataset.clone(), |c| format!("{} / {c}", f.dataset));
            out.push_str(&format!("- {who}: {}\n", f.error));
        }
    }
    out
}

fn timings_markdown(timings: &[TimingRow]) -> String {
    let mut out = String::from(
        "| Dataset | Classifier | Scenario | Binary tasks | Model (s) | Calibration per task (s) |\n|---|---|---|---:|---:|---:|\n",
    );
    for t in timings {
        let cal = if t.scenario.is_calibrated() { format!("{:.4}", t.calibration_seconds_per_task) } else { "-".into() };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {:.4} | {} |\n",
            t.dataset,
            t.classifier,
            t.scenario.title(),
            t.binary_tasks,
            t.fit_seconds,
            cal
        ));
    }
    out
}

fn json_error(e: serde_json::Error) -> HarnessError {
    HarnessError::Io(format!("json output: {e}"))
}

/// Renders the metrics table and the timing table.
pub fn emit_table(bundle: &ExperimentResults, format: OutputFormat) -> Result<RenderedTables, HarnessError> {
    if bundle.results.is_empty() {
        return Err(HarnessError::EmptyBundle);
    }
    let rows = rows(bundle);
    let timings = timing_rows(bundle);
    Ok(match format {
        OutputFormat::Csv => RenderedTables { metrics: metrics_csv(bundle, &rows)?, timings: timings_csv(&timings)? },
        OutputFormat::Markdown => {
            RenderedTables { metrics: metrics_markdown(bundle, &rows), timings: timings_markdown(&timings) }
        }
        OutputFormat::Json => {
            let doc = MetricsDoc {
                test: bundle.test.name(),
                alpha: bundle.alpha,
                folds: bundle.folds,
                seed: bundle.seed,
                rows: &rows,
                failures: &bundle.failures,
            };
            RenderedTables {
                metrics: serde_json::to_string_pretty(&doc).map_err(json_error)? + "\n",
                timings: serde_json::to_string_pretty(&timings).map_err(json_error)? + "\n",
            }
        }
    })
}
