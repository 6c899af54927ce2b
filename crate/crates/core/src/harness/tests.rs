use super::*;
use crate::classifiers::{NbParams, RfParams};
use crate::dataset::generate_waveform;
use ndarray::Array2;

fn nb() -> ClassifierSpec {
    ClassifierSpec::NaiveBayes(NbParams::default())
}

fn small_rf() -> ClassifierSpec {
    ClassifierSpec::RandomForest(RfParams { n_trees: 8, ..Default::default() })
}

fn quick_cfg() -> ExperimentConfig {
    ExperimentConfig {
        folds: 4,
        seed: 11,
        dgg: crate::calibration::DggParams { pool_target: 200, group_size: 10, ..Default::default() },
        ..Default::default()
    }
}

fn waveform_recipe(name: &str, n: usize) -> DatasetEntry {
    DatasetEntry::Inline(DatasetRecipe {
        name: name.into(),
        waveform: Some(WaveformSource { n, seed: 3, noise_sd: 1.0 }),
        ..Default::default()
    })
}

fn binary_dataset() -> LabeledDataset<f64> {
    let ds = generate_waveform::<f64>(160, 5).unwrap();
    crate::dataset::merge_classes(&ds, &[vec!["1".into(), "2".into()]]).unwrap()
}

#[test]
fn scenario_names_parse() {
    for s in Scenario::ALL {
        assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
    }
    assert_eq!("OvrCalibrated".parse::<Scenario>().unwrap(), Scenario::OvrCalibrated);
    assert_eq!("all-pairs-raw".parse::<Scenario>().unwrap(), Scenario::AllPairsRaw);
    assert!("platt".parse::<Scenario>().is_err());
    assert!(matches!("xlsx".parse::<OutputFormat>(), Err(HarnessError::UnsupportedFormat(_))));
}

#[test]
fn fold_vectors_have_length_k() {
    let ds = generate_waveform::<f64>(300, 1).unwrap();
    let cfg = ExperimentConfig { folds: 10, ..quick_cfg() };
    let r = run_scenario("w", &ds, &nb(), Scenario::MultiClassRaw, &cfg).unwrap();
    for v in [&r.mse, &r.log_loss, &r.fit_seconds, &r.calibration_seconds, &r.calibration_seconds_per_task] {
        assert_eq!(v.len(), 10);
    }
    assert!(r.fit_seconds.iter().all(|&t| t >= 0.0));
}

#[test]
fn two_class_schemes_agree() {
    let ds = binary_dataset();
    let idx: Vec<usize> = (0..120).collect();
    let train = ds.subset(&idx);
    let test: Array2<f64> = ds.features().slice(ndarray::s![120.., ..]).to_owned();
    let preds = predict_scenarios(
        &train,
        test.view(),
        &nb(),
        &[Scenario::MultiClassRaw, Scenario::OvrRaw, Scenario::AllPairsRaw],
        &quick_cfg(),
        4,
    )
    .unwrap();
    let base = preds[0].probabilities.values();
    for p in &preds[1..] {
        for (a, b) in p.probabilities.values().iter().zip(base) {
            assert!((a - b).abs() < 1e-9, "{}: {a} vs {b}", p.scenario);
        }
    }
}

#[test]
fn calibrated_rows_are_stochastic_and_counted() {
    let ds = generate_waveform::<f64>(240, 2).unwrap();
    let results = run_scenarios("w", &ds, &small_rf(), &Scenario::ALL, &quick_cfg()).unwrap();
    assert_eq!(results.len(), 5);
    let by = |s| results.iter().find(|r| r.scenario == s).unwrap();
    assert_eq!(by(Scenario::OvrCalibrated).binary_tasks, 3);
    assert_eq!(by(Scenario::AllPairsCalibrated).binary_tasks, 3);
    assert!(by(Scenario::OvrCalibrated).calibration_seconds.iter().all(|&t| t > 0.0));
    assert!(by(Scenario::OvrRaw).calibration_seconds.iter().all(|&t| t == 0.0));
    for r in &results {
        assert!(r.mse.iter().all(|&m| (0.0..=2.0).contains(&m)));
    }
}

#[test]
fn degenerate_tasks_fall_back_to_prior() {
    // class "lonely" has a single sample, so one fold trains without it
    let base = generate_waveform::<f64>(90, 8).unwrap();
    let mut labels = base.labels().to_vec();
    labels[0] = 3;
    let names = vec!["0".into(), "1".into(), "2".into(), "lonely".into()];
    let ds = LabeledDataset::new(base.features().clone(), labels, names).unwrap();
    let cfg = ExperimentConfig { folds: 3, ..quick_cfg() };
    let results = run_scenarios("lonely", &ds, &nb(), &Scenario::ALL, &cfg).unwrap();
    let ovr = results.iter().find(|r| r.scenario == Scenario::OvrCalibrated).unwrap();
    assert_eq!(ovr.degenerate_tasks, 1);
    let pairs = results.iter().find(|r| r.scenario == Scenario::AllPairsRaw).unwrap();
    assert_eq!(pairs.degenerate_tasks, 3);
    assert!(results.iter().all(|r| r.log_loss.iter().all(|v| v.is_finite())));
}

#[test]
fn experiment_counts_failures_and_self_comparison() {
    let cfg = ExperimentConfig {
        datasets: vec![
            waveform_recipe("a", 120),
            DatasetEntry::Inline(DatasetRecipe {
                name: "missing".into(),
                path: Some("/nonexistent/file.csv".into()),
                ..Default::default()
            }),
            waveform_recipe("b", 150),
        ],
        classifiers: vec![nb(), small_rf()],
        ..quick_cfg()
    };
    let bundle = run_experiment(&cfg).unwrap();
    assert_eq!(bundle.results.len(), 2 * 2 * 5);
    assert_eq!(bundle.failures.len(), 1);
    assert_eq!(bundle.failures[0].dataset, "missing");
    for metric in Metric::ALL {
        let own = bundle.comparison("a", "nb", Scenario::MultiClassRaw, metric).unwrap();
        assert_eq!(own.p_value, 1.0);
        assert!(!own.significant);
    }
}

#[test]
fn tables_are_deterministic_across_thread_counts() {
    let cfg = ExperimentConfig { datasets: vec![waveform_recipe("w", 150)], classifiers: vec![nb(), small_rf()], ..quick_cfg() };
    let a = emit_table(&run_experiment(&cfg).unwrap(), OutputFormat::Csv).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = single.install(|| emit_table(&run_experiment(&cfg).unwrap(), OutputFormat::Csv).unwrap());
    let serial = ExperimentConfig { parallel: false, ..cfg };
    let c = emit_table(&run_experiment(&serial).unwrap(), OutputFormat::Csv).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.metrics, c.metrics);
}

#[test]
fn csv_round_trips_as_numbers() {
    let cfg = ExperimentConfig { datasets: vec![waveform_recipe("w", 120)], classifiers: vec![nb()], ..quick_cfg() };
    let bundle = run_experiment(&cfg).unwrap();
    let tables = emit_table(&bundle, OutputFormat::Csv).unwrap();
    let mut reader = csv::Reader::from_reader(tables.metrics.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    for (h, v) in headers.iter().zip(rows[0].iter()).skip(3) {
        assert!(v.parse::<f64>().is_ok(), "{h} = {v:?}");
    }
    let mean_col = headers.iter().position(|h| h == "ovr_calibrated_ll").unwrap();
    let parsed: f64 = rows[0][mean_col].parse().unwrap();
    let expected = bundle.result("w", "nb", Scenario::OvrCalibrated).unwrap().mean(Metric::LogLoss);
    assert!((parsed - expected).abs() < 1e-6);

    let mut timing = csv::Reader::from_reader(tables.timings.as_bytes());
    assert_eq!(timing.records().count(), 5);
}

#[test]
fn markdown_marks_one_best_per_metric() {
    let cfg = ExperimentConfig {
        datasets: vec![waveform_recipe("w", 120), waveform_recipe("v", 140)],
        classifiers: vec![nb()],
        ..quick_cfg()
    };
    let md = emit_table(&run_experiment(&cfg).unwrap(), OutputFormat::Markdown).unwrap().metrics;
    let data_rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| w ") || l.starts_with("| v ")).collect();
    assert_eq!(data_rows.len(), 4);
    for line in data_rows {
        assert_eq!(line.matches("**").count(), 2, "{line}");
    }
    let json = emit_table(&run_experiment(&cfg).unwrap(), OutputFormat::Json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json.metrics).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn empty_bundle_is_rejected() {
    let bundle = ExperimentResults {
        test: TestKind::Welch,
        alpha: 0.05,
        folds: 10,
        seed: 0,
        results: vec![],
        comparisons: vec![],
        failures: vec![],
    };
    assert!(matches!(emit_table(&bundle, OutputFormat::Csv), Err(HarnessError::EmptyBundle)));
}

#[test]
fn config_parses_with_defaults() {
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{
            "datasets": ["recipes/ecoli.json", {"name": "w", "waveform": {"n": 500}}],
            "classifiers": [{"kind": "random_forest", "n_trees": 50}],
            "dgg": {"pool_target": 1000},
            "test": "paired",
            "alpha": 0.01
        }"#,
    )
    .unwrap();
    assert_eq!(cfg.folds, 10);
    assert_eq!(cfg.scenarios.len(), 5);
    assert_eq!(cfg.dgg.group_size, 20);
    assert_eq!(cfg.test, TestKind::Paired);
    assert!(matches!(&cfg.datasets[0], DatasetEntry::File(p) if p.ends_with("ecoli.json")));
    let bad = ExperimentConfig { folds: 1, ..Default::default() };
    assert!(bad.validate().is_err());
}
