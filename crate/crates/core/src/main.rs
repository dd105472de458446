//! `gbtune`: tune, sweep, and benchmark from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gbtune::bench::{
    capped_grid, emit_report, format_report, rate_sweep, read_report_csv, run_method_comparison,
    select_best_rate, BenchConfig, BenchReport, Budgets, ReportFormat, ReportMeta, ReportRow,
};
use gbtune::data::{load_csv, CsvSchema, Dataset};
use gbtune::gbt::GbtHyperParams;
use gbtune::objective::{default_space, ObjectiveContext};
use gbtune::spaces::{space_from_json_file, SearchSpace};
use gbtune::tuners::{
    grid_search, random_search, randomized_smbo, smbo, CvObjective, TpeConfig, TuneResult,
};
use gbtune::{Error, Result};

#[derive(Parser)]
#[command(name = "gbtune", version, about = "Hyperparameter tuning for a boosted-trees classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune on one dataset with a single method
    Tune(TuneArgs),
    /// Sweep subsampling rates and pick the cheapest near-best one
    Sweep(SweepArgs),
    /// Run a benchmark described by a JSON config file
    Bench(BenchArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV dataset path
    #[arg(long)]
    data: PathBuf,
    /// Target column name
    #[arg(long)]
    target: String,
    /// Categorical column names, comma-separated
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Missing-value tokens, comma-separated (default: empty string, NA, ?)
    #[arg(long, value_delimiter = ',')]
    missing: Option<Vec<String>>,
    /// Target label counted as the positive class (default: numeric 0/1)
    #[arg(long)]
    positive: Option<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let mut schema = CsvSchema::new(&self.target);
        schema.categorical = self.categorical.clone();
        if let Some(tokens) = &self.missing {
            schema.missing_tokens = tokens.clone();
        }
        schema.positive_label = self.positive.clone();
        load_csv(&self.data, &schema)
    }

    fn label(&self) -> String {
        self.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    }
}

#[derive(Args)]
struct CommonTuneArgs {
    /// Trial budget (random/tpe/randomized) or grid point cap (grid)
    #[arg(long)]
    trials: Option<usize>,
    /// Cross-validation folds
    #[arg(long, default_value_t = 3)]
    folds: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search-space JSON file (default: built-in learner space)
    #[arg(long)]
    space: Option<PathBuf>,
    /// Write a report file here in addition to the stdout summary
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report file format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

impl CommonTuneArgs {
    fn space(&self) -> Result<SearchSpace> {
        match &self.space {
            Some(path) => space_from_json_file(path),
            None => Ok(default_space()),
        }
    }

    fn tpe_config(&self) -> TpeConfig {
        TpeConfig {
            n_trials: self.trials.unwrap_or(TpeConfig::default().n_trials),
            ..TpeConfig::default()
        }
    }
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Tuning method
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Subsampling rate in (0, 1]; required by (and exclusive to) randomized
    #[arg(long)]
    rate: Option<f64>,
    #[command(flatten)]
    common: CommonTuneArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Subsampling rates to sweep, comma-separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.25, 0.5])]
    rates: Vec<f64>,
    /// Tolerance below the best mean Gini still considered best
    #[arg(long, default_value_t = 0.002)]
    epsilon: f64,
    #[command(flatten)]
    common: CommonTuneArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark config JSON file
    #[arg(long)]
    config: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Grid,
    Random,
    Tpe,
    Randomized,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

impl From<FormatArg> for ReportFormat {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Tune(args) => run_tune(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 1 for bad invocations, 2 for problems in input files or data shape,
/// 3 for failures arising mid-computation.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => 1,
        Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::SpaceFile { .. }
        | Error::EmptyFile { .. }
        | Error::MissingTargetColumn { .. }
        | Error::UnparseableCell { .. }
        | Error::BadTargetValue { .. }
        | Error::SingleClassTarget
        | Error::StratificationInfeasible { .. } => 2,
        Error::UndefinedAuc | Error::FeatureCountMismatch { .. } => 3,
    }
}

fn run_tune(args: TuneArgs) -> Result<()> {
    if args.method != MethodArg::Randomized && args.rate.is_some() {
        return Err(Error::InvalidArgument(
            "--rate only applies to --method randomized".into(),
        ));
    }
    let dataset = args.data.load()?;
    let space = args.common.space()?;
    let defaults = GbtHyperParams::default();
    let result = match args.method {
        MethodArg::Randomized => {
            let rate = args.rate.ok_or_else(|| {
                Error::InvalidArgument("--method randomized requires --rate".into())
            })?;
            randomized_smbo(
                &dataset,
                rate,
                &space,
                &args.common.tpe_config(),
                args.common.folds,
                args.common.seed,
                &defaults,
            )?
        }
        _ => {
            let ctx = ObjectiveContext::on_full(
                &dataset,
                args.common.folds,
                space.clone(),
                defaults,
                args.common.seed,
            )?;
            let mut objective = CvObjective::new(&ctx);
            match args.method {
                MethodArg::Grid => {
                    let grid = capped_grid(&space, 2, args.common.trials.unwrap_or(500))?;
                    grid_search(&mut objective, &grid)?
                }
                MethodArg::Random => random_search(
                    &mut objective,
                    args.common.trials.unwrap_or(10),
                    args.common.seed,
                )?,
                MethodArg::Tpe => {
                    smbo(&mut objective, &args.common.tpe_config(), args.common.seed)?
                }
                MethodArg::Randomized => unreachable!("handled above"),
            }
        }
    };

    println!("method: {}", result.method);
    println!("trials: {}", result.trials.len());
    println!("best_mean_gini: {:.4}", result.best_mean_gini);
    println!(
        "best_params: {}",
        serde_json::to_string(&result.best_params)?
    );
    println!("elapsed_seconds: {:.2}", result.elapsed_seconds);
    if let Some(rate) = result.sample_rate {
        println!("sample_rate: {rate}");
    }
    if let Some(full) = result.full_data_mean_gini {
        println!("full_data_mean_gini: {full:.4}");
    }
    if let Some(path) = &args.common.out {
        let report = single_run_report(&args.data.label(), &result, &args.common);
        emit_report(&report, args.common.format.into(), path)?;
        println!("report: {}", path.display());
    }
    Ok(())
}

fn single_run_report(label: &str, result: &TuneResult, common: &CommonTuneArgs) -> BenchReport {
    BenchReport {
        rows: vec![ReportRow {
            dataset: label.to_string(),
            method: result.method.clone(),
            rate: result.sample_rate,
            mean_gini: result.best_mean_gini,
            time_seconds: result.elapsed_seconds,
        }],
        meta: report_meta(common),
    }
}

fn report_meta(common: &CommonTuneArgs) -> ReportMeta {
    ReportMeta {
        seed: common.seed,
        k: common.folds,
        budgets: Budgets::default(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        errors: Vec::new(),
    }
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let dataset = args.data.load()?;
    let space = args.common.space()?;
    let config = args.common.tpe_config();
    let sweep = rate_sweep(
        &dataset,
        &args.rates,
        &space,
        &config,
        args.common.folds,
        args.common.seed,
        &GbtHyperParams::default(),
    )?;
    let selected = select_best_rate(&sweep, args.epsilon)?;

    println!("rate,mean_gini,time_seconds");
    for point in &sweep {
        println!(
            "{},{:.4},{:.2}",
            point.rate, point.mean_gini, point.time_seconds
        );
    }
    println!("selected_rate: {selected}");

    if let Some(path) = &args.common.out {
        let label = args.data.label();
        let report = BenchReport {
            rows: sweep
                .iter()
                .map(|p| ReportRow {
                    dataset: label.clone(),
                    method: "randomized".to_string(),
                    rate: Some(p.rate),
                    mean_gini: p.mean_gini,
                    time_seconds: p.time_seconds,
                })
                .collect(),
            meta: report_meta(&args.common),
        };
        emit_report(&report, args.common.format.into(), path)?;
        println!("report: {}", path.display());
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let config = BenchConfig::from_json_file(&args.config)?;
    let report = run_method_comparison(&config)?;
    for problem in &report.meta.errors {
        eprintln!("warning: skipped {problem}");
    }
    match &config.output {
        Some(path) => {
            emit_report(&report, config.format, path)?;
            // Written reports should be byte-identical to a re-read.
            if config.format == ReportFormat::Csv {
                read_report_csv(path)?;
            }
            println!("report: {}", path.display());
        }
        None => print!("{}", format_report(&report, config.format)),
    }
    Ok(())
}
