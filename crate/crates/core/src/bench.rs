//! Benchmark runner: rate sweeps, four-method comparisons on shared folds,
//! and CSV/Markdown report emission.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::{load_csv, stratified_kfold, CsvSchema, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::gbt::GbtHyperParams;
use crate::objective::{default_space, ObjectiveContext};
use crate::spaces::{cartesian_product, space_from_json, ParamAssignment, SearchSpace};
use crate::tuners::{
    grid_search, random_search, randomized_smbo, smbo, CvObjective, TpeConfig,
};

/// One dataset to benchmark: a CSV path plus its schema.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Label used in report rows.
    pub name: String,
    pub path: PathBuf,
    /// Target column name.
    pub target: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    /// Missing-value tokens; None keeps the loader defaults.
    #[serde(default)]
    pub missing: Option<Vec<String>>,
    /// Target label counting as the positive class; None expects numeric 0/1.
    #[serde(default)]
    pub positive: Option<String>,
}

impl DatasetSpec {
    pub fn schema(&self) -> CsvSchema {
        let mut schema = CsvSchema::new(&self.target);
        schema.categorical = self.categorical.clone();
        if let Some(tokens) = &self.missing {
            schema.missing_tokens = tokens.clone();
        }
        schema.positive_label = self.positive.clone();
        schema
    }

    pub fn load(&self) -> Result<Dataset> {
        load_csv(&self.path, &self.schema())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Grid,
    Random,
    Tpe,
    Randomized,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Grid => "grid",
            Method::Random => "random",
            Method::Tpe => "tpe",
            Method::Randomized => "randomized",
        })
    }
}

/// Per-method trial budgets.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Grid points are capped by coarsening quantized dimensions.
    #[serde(default = "default_grid_cap")]
    pub grid_max_points: usize,
    #[serde(default = "default_random_trials")]
    pub random_trials: usize,
    /// Trial budget for SMBO and for the subsampled variant.
    #[serde(default = "default_smbo_trials")]
    pub smbo_trials: usize,
}

fn default_grid_cap() -> usize {
    500
}

fn default_random_trials() -> usize {
    10
}

fn default_smbo_trials() -> usize {
    TpeConfig::default().n_trials
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            grid_max_points: default_grid_cap(),
            random_trials: default_random_trials(),
            smbo_trials: default_smbo_trials(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
}

/// Benchmark run description, deserializable from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    /// Sampling rates swept when no explicit `rate` is given.
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    /// Fixed sampling rate for the subsampled method; None selects one by
    /// sweeping `rates`.
    #[serde(default)]
    pub rate: Option<f64>,
    /// Tolerance for rate selection.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub seed: u64,
    /// Search space as inline JSON (same schema as space files); None uses
    /// the default learner space.
    #[serde(default)]
    pub space: Option<serde_json::Value>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
}

fn all_methods() -> Vec<Method> {
    vec![Method::Grid, Method::Random, Method::Tpe, Method::Randomized]
}

fn default_rates() -> Vec<f64> {
    vec![0.10, 0.20, 0.25, 0.50]
}

fn default_epsilon() -> f64 {
    0.002
}

fn default_k() -> usize {
    3
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: BenchConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one method is required".into(),
            ));
        }
        for &rate in self.rates.iter().chain(&self.rate) {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "rates must be in (0, 1], got {rate}"
                )));
            }
        }
        if self.rates.is_empty() && self.rate.is_none() {
            return Err(Error::InvalidArgument(
                "either a fixed rate or a non-empty rate list is required".into(),
            ));
        }
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.budgets.grid_max_points < 1
            || self.budgets.random_trials < 1
            || self.budgets.smbo_trials < 1
        {
            return Err(Error::InvalidArgument(
                "all budgets must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn resolve_space(&self) -> Result<SearchSpace> {
        match &self.space {
            Some(value) => space_from_json(&value.to_string()),
            None => Ok(default_space()),
        }
    }

    fn tpe_config(&self) -> TpeConfig {
        TpeConfig {
            n_trials: self.budgets.smbo_trials,
            ..TpeConfig::default()
        }
    }
}

/// One line of a benchmark report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub method: String,
    /// Sampling rate; None for methods that tune on the full data.
    pub rate: Option<f64>,
    pub mean_gini: f64,
    pub time_seconds: f64,
}

/// Run provenance carried alongside the rows.
#[derive(Debug, Clone)]
pub struct ReportMeta {
    pub seed: u64,
    pub k: usize,
    pub budgets: Budgets,
    pub tool_version: String,
    /// Datasets that failed to load, with the reason; their rows are absent.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
    pub meta: ReportMeta,
}

/// One point of a sampling-rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub rate: f64,
    /// Best sample-CV mean Gini found at this rate.
    pub mean_gini: f64,
    /// Tuning wall time (sampling + SMBO, excluding the full-data recheck).
    pub time_seconds: f64,
}

/// Run the subsampled tuner once per rate (same seed and budget throughout)
/// and report each rate's best score and tuning time, ordered by rate.
pub fn rate_sweep(
    dataset: &Dataset,
    rates: &[f64],
    space: &SearchSpace,
    config: &TpeConfig,
    k: usize,
    seed: u64,
    defaults: &GbtHyperParams,
) -> Result<Vec<SweepPoint>> {
    if rates.is_empty() {
        return Err(Error::InvalidArgument("rates must be non-empty".into()));
    }
    let mut ordered = rates.to_vec();
    ordered.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(ordered.len());
    for rate in ordered {
        let result = randomized_smbo(dataset, rate, space, config, k, seed, defaults)?;
        points.push(SweepPoint {
            rate,
            mean_gini: result.best_mean_gini,
            time_seconds: result.elapsed_seconds,
        });
    }
    Ok(points)
}

/// Smallest rate whose mean Gini is within `epsilon` of the sweep's best.
pub fn select_best_rate(sweep: &[SweepPoint], epsilon: f64) -> Result<f64> {
    if sweep.is_empty() {
        return Err(Error::InvalidArgument("sweep must be non-empty".into()));
    }
    if epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let best = sweep
        .iter()
        .map(|p| p.mean_gini)
        .fold(f64::NEG_INFINITY, f64::max);
    let pick = sweep
        .iter()
        .filter(|p| p.mean_gini >= best - epsilon)
        .map(|p| p.rate)
        .fold(f64::INFINITY, f64::min);
    Ok(pick)
}

/// Discretize a space for grid search, capping the point count by coarsening
/// quantized dimensions: while over the cap, the largest quantized dimension
/// (ties to the earliest) keeps only an evenly-spaced half of its values.
/// Spaces whose continuous dimensions alone exceed the cap coarsen those the
/// same way as a last resort.
pub fn capped_grid(
    space: &SearchSpace,
    resolution: usize,
    max_points: usize,
) -> Result<Vec<ParamAssignment>> {
    if max_points < 1 {
        return Err(Error::InvalidArgument(
            "max_points must be at least 1".into(),
        ));
    }
    let mut per_dim = Vec::with_capacity(space.len());
    let mut quantized = Vec::with_capacity(space.len());
    for (name, dist) in space.dimensions() {
        per_dim.push((name.clone(), dist.grid_values(resolution)?));
        quantized.push(matches!(
            dist,
            crate::spaces::Distribution::QUniform { .. }
                | crate::spaces::Distribution::QLogUniform { .. }
                | crate::spaces::Distribution::QNormal { .. }
        ));
    }
    let total = |dims: &[(String, Vec<crate::spaces::ParamValue>)]| -> usize {
        dims.iter()
            .map(|(_, v)| v.len())
            .try_fold(1usize, usize::checked_mul)
            .unwrap_or(usize::MAX)
    };
    while total(&per_dim) > max_points {
        let widest = |want_quantized: bool| {
            per_dim
                .iter()
                .enumerate()
                .filter(|(i, (_, v))| quantized[*i] == want_quantized && v.len() > 1)
                .max_by(|(ai, (_, av)), (bi, (_, bv))| {
                    av.len().cmp(&bv.len()).then(bi.cmp(ai))
                })
                .map(|(i, _)| i)
        };
        let Some(target) = widest(true).or_else(|| widest(false)) else {
            break; // every dimension is a singleton; cap unreachable
        };
        let values = &mut per_dim[target].1;
        let n = values.len();
        let m = n.div_ceil(2);
        *values = if m == 1 {
            vec![values[0].clone()]
        } else {
            (0..m)
                .map(|i| values[(i * (n - 1) + (m - 1) / 2) / (m - 1)].clone())
                .collect()
        };
    }
    Ok(cartesian_product(&per_dim))
}

/// A dataset's comparison rows plus the fold plan every method consumed.
#[derive(Debug)]
pub struct MethodComparison {
    pub rows: Vec<ReportRow>,
    pub fold_plan: FoldPlan,
}

/// Compare the configured methods on one dataset.
///
/// All methods score against the same full-data fold plan: grid, random, and
/// TPE tune directly on it, and the subsampled method rechecks its winner on
/// it. The subsampled row reports the sample-CV Gini and tuning-only time so
/// the speed comparison is honest.
pub fn compare_methods(
    name: &str,
    dataset: &Dataset,
    config: &BenchConfig,
) -> Result<MethodComparison> {
    config.validate()?;
    let space = config.resolve_space()?;
    let defaults = GbtHyperParams::default();
    let tpe = config.tpe_config();
    let fold_plan = stratified_kfold(dataset, config.k, config.seed)?;
    let full_rows: Vec<usize> = (0..dataset.n_rows()).collect();

    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let ctx = ObjectiveContext::new(
            dataset,
            full_rows.clone(),
            fold_plan.clone(),
            space.clone(),
            defaults.clone(),
            config.seed,
        )?;
        let mut objective = CvObjective::new(&ctx);
        let result = match method {
            Method::Grid => {
                let grid = capped_grid(&space, 2, config.budgets.grid_max_points)?;
                grid_search(&mut objective, &grid)?
            }
            Method::Random => {
                random_search(&mut objective, config.budgets.random_trials, config.seed)?
            }
            Method::Tpe => smbo(&mut objective, &tpe, config.seed)?,
            Method::Randomized => {
                let rate = match config.rate {
                    Some(rate) => rate,
                    None => {
                        let sweep = rate_sweep(
                            dataset,
                            &config.rates,
                            &space,
                            &tpe,
                            config.k,
                            config.seed,
                            &defaults,
                        )?;
                        select_best_rate(&sweep, config.epsilon)?
                    }
                };
                randomized_smbo(dataset, rate, &space, &tpe, config.k, config.seed, &defaults)?
            }
        };
        rows.push(ReportRow {
            dataset: name.to_string(),
            method: result.method.clone(),
            rate: result.sample_rate,
            mean_gini: result.best_mean_gini,
            time_seconds: result.elapsed_seconds,
        });
    }
    Ok(MethodComparison { rows, fold_plan })
}

/// Load each configured dataset and compare the configured methods on it.
/// Datasets that fail to load contribute no rows; the failure is recorded in
/// the report metadata.
pub fn run_method_comparison(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for spec in &config.datasets {
        match spec.load() {
            Ok(dataset) => {
                rows.extend(compare_methods(&spec.name, &dataset, config)?.rows);
            }
            Err(err) => errors.push(format!("{}: {err}", spec.name)),
        }
    }
    Ok(BenchReport {
        rows,
        meta: ReportMeta {
            seed: config.seed,
            k: config.k,
            budgets: config.budgets.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            errors,
        },
    })
}

pub const REPORT_HEADER: &str = "dataset,method,rate,mean_gini,time_seconds";

/// Render report rows; Gini to 4 decimals, seconds to 2, rate blank for
/// full-data methods.
pub fn format_report(report: &BenchReport, format: ReportFormat) -> String {
    let rate_cell = |row: &ReportRow| row.rate.map(|r| r.to_string()).unwrap_or_default();
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(REPORT_HEADER);
            out.push('\n');
            for row in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{:.4},{:.2}\n",
                    row.dataset,
                    row.method,
                    rate_cell(row),
                    row.mean_gini,
                    row.time_seconds
                ));
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out =
                String::from("| dataset | method | rate | mean_gini | time_seconds |\n");
            out.push_str("| --- | --- | --- | --- | --- |\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "| {} | {} | {} | {:.4} | {:.2} |\n",
                    row.dataset,
                    row.method,
                    rate_cell(row),
                    row.mean_gini,
                    row.time_seconds
                ));
            }
            out
        }
    }
}

pub fn emit_report(report: &BenchReport, format: ReportFormat, path: &Path) -> Result<()> {
    fs::write(path, format_report(report, format))?;
    Ok(())
}

/// Parse a CSV emitted by [`emit_report`] back into rows.
pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let expected: Vec<&str> = REPORT_HEADER.split(',').collect();
    let header = reader.headers()?;
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidArgument(format!(
            "unexpected report header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let field = |j: usize| record.get(j).unwrap_or_default().to_string();
        let numeric = |j: usize| -> Result<f64> {
            field(j).parse().map_err(|_| Error::UnparseableCell {
                row: i + 1,
                column: expected[j].to_string(),
                value: field(j),
            })
        };
        let rate_field = field(2);
        rows.push(ReportRow {
            dataset: field(0),
            method: field(1),
            rate: if rate_field.is_empty() {
                None
            } else {
                Some(numeric(2)?)
            },
            mean_gini: numeric(3)?,
            time_seconds: numeric(4)?,
        });
    }
    Ok(rows)
}
