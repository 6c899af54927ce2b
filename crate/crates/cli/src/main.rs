//! Command-line front end: run experiments, generate Waveform data, and run
//! the oracle self-test.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use multical::classifiers::{ClassifierSpec, NbParams, RfParams};
use multical::dataset::{generate_waveform_with_noise, write_csv, CsvOptions, Delimiter, LabelColumn};
use multical::harness::{emit_table, run_experiment, DatasetEntry, DatasetRecipe, ExperimentConfig, OutputFormat, Scenario};
use multical::stats::TestKind;

#[derive(Parser)]
#[command(name = "multical", version, about = "Calibrated multi-class probabilities from binary decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate the calibration scenarios on one or more data sets.
    Run(RunArgs),
    /// Write a synthetic Waveform data set (21 features, 3 classes) as CSV.
    GenWaveform {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the solvers against independent reference implementations.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON). Other data options are ignored when given.
    #[arg(long, conflicts_with = "data")]
    config: Option<PathBuf>,
    /// Delimited data file.
    #[arg(long, required_unless_present = "config")]
    data: Option<PathBuf>,
    /// Label column: header name or position (negative counts from the end).
    #[arg(long, default_value = "-1", allow_hyphen_values = true)]
    label: String,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    #[arg(long, value_parser = ["comma", "semicolon", "tab", "whitespace"], default_value = "comma")]
    delimiter: String,
    /// Comma-separated class names to merge into one class; repeatable.
    #[arg(long)]
    merge: Vec<String>,
    #[arg(long, value_parser = ["nb", "rf"], default_value = "nb")]
    classifier: String,
    /// Trees in the random forest.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Scenario name, a comma-separated list, or `all`.
    #[arg(long, default_value = "all")]
    scenario: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = ["welch", "paired"], default_value = "welch")]
    test: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Metrics table path; timings are written next to it. Prints to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, markdown or json. Defaults to the config's format, else csv.
    #[arg(long)]
    format: Option<String>,
}

fn parse_scenarios(s: &str) -> Result<Vec<Scenario>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Scenario::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse::<Scenario>().map_err(Into::into)).collect()
}

fn config_from_args(args: &RunArgs) -> Result<ExperimentConfig> {
    if let Some(path) = &args.config {
        return ExperimentConfig::from_file(path).with_context(|| format!("loading {}", path.display()));
    }
    let data = args.data.as_ref().expect("clap enforces --data without --config");
    let delimiter = match args.delimiter.as_str() {
        "semicolon" => Delimiter::Semicolon,
        "tab" => Delimiter::Tab,
        "whitespace" => Delimiter::Whitespace,
        _ => Delimiter::Comma,
    };
    let recipe = DatasetRecipe {
        name: data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into()),
        path: Some(data.clone()),
        csv: CsvOptions {
            delimiter,
            has_header: !args.no_header,
            label_column: LabelColumn::from(args.label.as_str()),
            ..Default::default()
        },
        merge: args.merge.iter().map(|g| g.split(',').map(|c| c.trim().to_string()).collect()).collect(),
        ..Default::default()
    };
    let classifier = match args.classifier.as_str() {
        "rf" => ClassifierSpec::RandomForest(RfParams { n_trees: args.trees, ..Default::default() }),
        _ => ClassifierSpec::NaiveBayes(NbParams::default()),
    };
    let cfg = ExperimentConfig {
        datasets: vec![DatasetEntry::Inline(recipe)],
        classifiers: vec![classifier],
        scenarios: parse_scenarios(&args.scenario)?,
        folds: args.folds,
        seed: args.seed,
        test: if args.test == "paired" { TestKind::Paired } else { TestKind::Welch },
        alpha: args.alpha,
        ..Default::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// `results.csv` → `results.timings.csv`
fn timings_path(out: &Path, format: OutputFormat) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}.timings.{}", format.extension()))
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let cfg = config_from_args(args)?;
    let format = match &args.format {
        Some(f) => f.parse::<OutputFormat>()?,
        None => cfg.format,
    };
    let bundle = run_experiment(&cfg)?;
    for f in &bundle.failures {
        log::error!("{} failed: {}", f.dataset, f.error);
    }
    if bundle.results.is_empty() {
        bail!("no data set could be processed");
    }
    let tables = emit_table(&bundle, format)?;
    match &args.out {
        Some(out) => {
            fs::write(out, &tables.metrics).with_context(|| format!("writing {}", out.display()))?;
            let tp = timings_path(out, format);
            fs::write(&tp, &tables.timings).with_context(|| format!("writing {}", tp.display()))?;
            eprintln!("wrote {} and {}", out.display(), tp.display());
        }
        None => {
            print!("{}", tables.metrics);
            println!();
            print!("{}", tables.timings);
        }
    }
    Ok(if bundle.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(&args),
        Command::GenWaveform { n, seed, noise, out } => (|| {
            let ds = generate_waveform_with_noise::<f64>(n, seed, noise)?;
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_csv(&ds, std::io::BufWriter::new(file))?;
            Ok(ExitCode::SUCCESS)
        })(),
        Command::Selftest { seed } => {
            let checks = multical::selftest::run_all(seed);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
