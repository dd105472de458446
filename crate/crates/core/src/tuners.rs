//! The four tuning strategies: exhaustive grid search, random search,
//! TPE-driven sequential model-based optimization (SMBO), and the
//! subsample-accelerated variant that tunes on a stratified fraction of the
//! rows and re-scores the winner on the full data.
//!
//! Tuners are generic over an [`Objective`], so the same SMBO loop drives
//! both cross-validated learner tuning ([`CvObjective`]) and synthetic
//! functions ([`FnObjective`]).

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{stratified_kfold, stratified_sample, Dataset};
use crate::error::{Error, Result};
use crate::gbt::GbtHyperParams;
use crate::objective::{evaluate, ObjectiveContext, Trial};
use crate::spaces::{quantize, Distribution, ParamAssignment, ParamValue, SearchSpace};

/// Something a tuner can optimize: a space plus a trial evaluator.
pub trait Objective {
    fn space(&self) -> &SearchSpace;
    fn evaluate(&mut self, params: &ParamAssignment, index: usize) -> Result<Trial>;
}

/// Cross-validated learner objective over an [`ObjectiveContext`].
pub struct CvObjective<'a> {
    ctx: &'a ObjectiveContext<'a>,
}

impl<'a> CvObjective<'a> {
    pub fn new(ctx: &'a ObjectiveContext<'a>) -> Self {
        CvObjective { ctx }
    }
}

impl Objective for CvObjective<'_> {
    fn space(&self) -> &SearchSpace {
        &self.ctx.space
    }

    fn evaluate(&mut self, params: &ParamAssignment, index: usize) -> Result<Trial> {
        evaluate(self.ctx, params, index)
    }
}

/// Synthetic objective from a plain loss function; `mean_gini` is recorded
/// as `-loss` so argmax-Gini and argmin-loss stay consistent.
pub struct FnObjective<F> {
    space: SearchSpace,
    f: F,
}

impl<F: FnMut(&ParamAssignment) -> f64> FnObjective<F> {
    pub fn new(space: SearchSpace, f: F) -> Self {
        FnObjective { space, f }
    }
}

impl<F: FnMut(&ParamAssignment) -> f64> Objective for FnObjective<F> {
    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&mut self, params: &ParamAssignment, index: usize) -> Result<Trial> {
        let started = Instant::now();
        let loss = (self.f)(params);
        Ok(Trial {
            params: params.clone(),
            fold_ginis: Vec::new(),
            mean_gini: -loss,
            loss,
            wall_seconds: started.elapsed().as_secs_f64(),
            index,
        })
    }
}

/// Outcome of one tuning run.
#[derive(Debug, Clone)]
pub struct TuneResult {
    /// "grid", "random", "tpe", or "randomized".
    pub method: String,
    pub best_params: ParamAssignment,
    pub best_mean_gini: f64,
    pub trials: Vec<Trial>,
    pub elapsed_seconds: f64,
    /// Set by the subsample-accelerated tuner only.
    pub sample_rate: Option<f64>,
    /// Best params re-scored once on full-data folds (subsampled tuner only).
    pub full_data_mean_gini: Option<f64>,
    /// Wall time of that re-scoring, kept out of `elapsed_seconds`.
    pub full_eval_seconds: Option<f64>,
}

/// TPE settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TpeConfig {
    /// Total trial budget S.
    pub n_trials: usize,
    /// Prior-sampled warmup trials before the surrogate activates; budgets
    /// at or below this reduce to pure random search.
    pub n_startup: usize,
    /// Fraction of history forming the "good" set, in (0, 1).
    pub gamma_quantile: f64,
    /// Candidates drawn from the good-set estimator per suggestion.
    pub n_candidates: usize,
    /// Kernel bandwidth floor, as a fraction of each dimension's scale.
    pub kde_bandwidth_floor: f64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        TpeConfig {
            n_trials: 25,
            n_startup: 10,
            gamma_quantile: 0.25,
            n_candidates: 24,
            kde_bandwidth_floor: 1e-3,
        }
    }
}

impl TpeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 1 {
            return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
        }
        if !(self.gamma_quantile > 0.0 && self.gamma_quantile < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma_quantile must be in (0, 1), got {}",
                self.gamma_quantile
            )));
        }
        if self.n_candidates < 1 {
            return Err(Error::InvalidArgument(
                "n_candidates must be at least 1".into(),
            ));
        }
        if !(self.kde_bandwidth_floor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kde_bandwidth_floor must be > 0, got {}",
                self.kde_bandwidth_floor
            )));
        }
        Ok(())
    }
}

/// First trial attaining the maximum mean Gini.
fn best_index(trials: &[Trial]) -> usize {
    let mut best = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.mean_gini > trials[best].mean_gini {
            best = i;
        }
    }
    best
}

fn finish(method: &str, trials: Vec<Trial>, started: Instant) -> TuneResult {
    let best = best_index(&trials);
    TuneResult {
        method: method.to_string(),
        best_params: trials[best].params.clone(),
        best_mean_gini: trials[best].mean_gini,
        trials,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        sample_rate: None,
        full_data_mean_gini: None,
        full_eval_seconds: None,
    }
}

/// Evaluate every grid point exactly once, in order.
pub fn grid_search<O: Objective + ?Sized>(
    obj: &mut O,
    grid: &[ParamAssignment],
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid must be non-empty".into()));
    }
    let started = Instant::now();
    let mut trials = Vec::with_capacity(grid.len());
    for (i, point) in grid.iter().enumerate() {
        trials.push(obj.evaluate(point, i)?);
    }
    Ok(finish("grid", trials, started))
}

/// Evaluate `n_trials` independent draws from the space.
pub fn random_search<O: Objective + ?Sized>(
    obj: &mut O,
    n_trials: usize,
    seed: u64,
) -> Result<TuneResult> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(n_trials);
    for i in 0..n_trials {
        let params = obj.space().sample(&mut rng);
        trials.push(obj.evaluate(&params, i)?);
    }
    Ok(finish("random", trials, started))
}

/// TPE-driven SMBO: prior-sampled warmup, then each suggestion maximizes the
/// density ratio of good over bad configurations across the full history.
pub fn smbo<O: Objective + ?Sized>(
    obj: &mut O,
    config: &TpeConfig,
    seed: u64,
) -> Result<TuneResult> {
    config.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials: Vec<Trial> = Vec::with_capacity(config.n_trials);
    for i in 0..config.n_trials {
        let params = if i < config.n_startup || trials.is_empty() {
            obj.space().sample(&mut rng)
        } else {
            tpe_suggest(&trials, obj.space(), config, &mut rng)
        };
        trials.push(obj.evaluate(&params, i)?);
    }
    Ok(finish("tpe", trials, started))
}

/// Tune on a stratified sample, then re-score the winner on full-data folds.
///
/// `elapsed_seconds` covers sampling, folding, and the SMBO loop; the single
/// full-data re-evaluation is timed separately in `full_eval_seconds`.
pub fn randomized_smbo(
    dataset: &Dataset,
    rate: f64,
    space: &SearchSpace,
    config: &TpeConfig,
    k: usize,
    seed: u64,
    defaults: &GbtHyperParams,
) -> Result<TuneResult> {
    let started = Instant::now();
    let subset = stratified_sample(dataset, rate, seed)?;
    let ctx = ObjectiveContext::on_rows(
        dataset,
        subset,
        k,
        space.clone(),
        defaults.clone(),
        seed,
    )?;
    let mut result = smbo(&mut CvObjective::new(&ctx), config, seed)?;
    result.method = "randomized".to_string();
    result.elapsed_seconds = started.elapsed().as_secs_f64();
    result.sample_rate = Some(rate);

    let recheck = Instant::now();
    let full_plan = stratified_kfold(dataset, k, seed)?;
    let full_ctx = ObjectiveContext::new(
        dataset,
        (0..dataset.n_rows()).collect(),
        full_plan,
        space.clone(),
        defaults.clone(),
        seed,
    )?;
    let full_trial = evaluate(&full_ctx, &result.best_params, result.trials.len())?;
    result.full_data_mean_gini = Some(full_trial.mean_gini);
    result.full_eval_seconds = Some(recheck.elapsed().as_secs_f64());
    Ok(result)
}

// ---------------------------------------------------------------------------
// TPE internals
// ---------------------------------------------------------------------------

/// Support enumerations beyond this size fall back to continuous treatment.
const MAX_ENUMERATED_SUPPORT: usize = 10_000;

/// Parzen estimator for one dimension of one (good or bad) trial set.
enum ParzenDim {
    /// Gaussian kernels at each observation plus one prior-weighted
    /// component; all components weigh 1/(m+1).
    Continuous {
        centers: Vec<f64>,
        bandwidths: Vec<f64>,
        /// The dimension's own distribution (continuous analog for quantized
        /// dimensions treated continuously).
        prior: Distribution,
        /// Clamp range for kernel draws on bounded supports.
        clamp: Option<(f64, f64)>,
        /// Snap samples to multiples of q (quantized fallback only).
        quantize_q: Option<f64>,
    },
    /// Add-one-style smoothing: mass(v) proportional to count(v) plus the
    /// prior mass of v, normalized over the enumerated support.
    Categorical {
        values: Vec<ParamValue>,
        masses: Vec<f64>,
        /// Quantization step for keying real values.
        q: Option<f64>,
        /// Pieces for scoring values outside the enumerated support:
        /// mass = prior_mass(v) / (n_obs + 1) / norm.
        dist: Distribution,
        n_obs: f64,
        norm: f64,
    },
}

fn real_obs(observations: &[&ParamValue]) -> Vec<f64> {
    observations
        .iter()
        .filter_map(|v| v.as_real())
        .collect()
}

/// Adaptive bandwidths over sorted centers: each kernel spans its larger
/// neighbor gap, clipped into an interval whose lower end shrinks as
/// observations accumulate. Wide early kernels keep candidates exploring
/// past a clustered history; the shrinking clip sharpens refinement later.
fn bandwidths(centers: &[f64], floor_frac: f64, scale: f64) -> Vec<f64> {
    let m = centers.len();
    let adaptive_floor = scale / 100.0_f64.min(m as f64 + 1.0);
    let floor = (floor_frac * scale).max(adaptive_floor);
    (0..m)
        .map(|i| {
            let left = (i > 0).then(|| centers[i] - centers[i - 1]);
            let right = (i + 1 < m).then(|| centers[i + 1] - centers[i]);
            let gap = match (left, right) {
                (Some(l), Some(r)) => l.max(r),
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => scale,
            };
            gap.clamp(floor, scale.max(floor))
        })
        .collect()
}

fn build_continuous(
    observations: &[&ParamValue],
    prior: Distribution,
    scale: f64,
    floor_frac: f64,
    clamp: Option<(f64, f64)>,
    quantize_q: Option<f64>,
) -> ParzenDim {
    let mut centers = real_obs(observations);
    centers.sort_by(f64::total_cmp);
    let bw = bandwidths(&centers, floor_frac, scale);
    ParzenDim::Continuous {
        centers,
        bandwidths: bw,
        prior,
        clamp,
        quantize_q,
    }
}

fn build_categorical(
    observations: &[&ParamValue],
    support: Vec<ParamValue>,
    q: Option<f64>,
    dist: &Distribution,
) -> ParzenDim {
    let n_obs = observations.len() as f64;
    let count_of = |v: &ParamValue| {
        observations
            .iter()
            .filter(|o| values_match(o, v, q))
            .count() as f64
    };
    let mut masses: Vec<f64> = support
        .iter()
        .map(|v| (count_of(v) + dist.log_density(v).exp()) / (n_obs + 1.0))
        .collect();
    let norm: f64 = masses.iter().sum();
    for m in masses.iter_mut() {
        *m /= norm;
    }
    ParzenDim::Categorical {
        values: support,
        masses,
        q,
        dist: dist.clone(),
        n_obs,
        norm,
    }
}

fn values_match(a: &ParamValue, b: &ParamValue, q: Option<f64>) -> bool {
    match (a, b) {
        (ParamValue::Label(x), ParamValue::Label(y)) => x == y,
        (ParamValue::Real(x), ParamValue::Real(y)) => match q {
            Some(q) => (x / q).round() as i64 == (y / q).round() as i64,
            None => x == y,
        },
        _ => false,
    }
}

/// Build the Parzen estimator for one dimension from one trial set.
fn build_parzen(dist: &Distribution, observations: &[&ParamValue], floor_frac: f64) -> ParzenDim {
    match dist {
        Distribution::Uniform { lo, hi } | Distribution::LogUniform { lo, hi } => {
            build_continuous(
                observations,
                dist.clone(),
                hi - lo,
                floor_frac,
                Some((*lo, *hi)),
                None,
            )
        }
        Distribution::Normal { sigma, .. } => build_continuous(
            observations,
            dist.clone(),
            *sigma,
            floor_frac,
            None,
            None,
        ),
        Distribution::QUniform { lo, hi, q } | Distribution::QLogUniform { lo, hi, q } => {
            let n_points = ((hi - lo) / q).round() as usize + 1;
            if n_points <= MAX_ENUMERATED_SUPPORT {
                let support = dist.grid_values(1).expect("resolution 1 is valid");
                build_categorical(observations, support, Some(*q), dist)
            } else {
                let continuous = match dist {
                    Distribution::QUniform { .. } => Distribution::Uniform { lo: *lo, hi: *hi },
                    _ => Distribution::LogUniform { lo: *lo, hi: *hi },
                };
                build_continuous(
                    observations,
                    continuous,
                    hi - lo,
                    floor_frac,
                    Some((*lo, *hi)),
                    Some(*q),
                )
            }
        }
        Distribution::QNormal { mu, sigma, q } => {
            // Enumerate the +/- 4 sigma window (plus any observed outliers);
            // beyond the size cap, treat the dimension continuously.
            let n_points = (8.0 * sigma / q).round() as usize + 1;
            if n_points <= MAX_ENUMERATED_SUPPORT {
                let k_min = ((mu - 4.0 * sigma) / q).round() as i64;
                let k_max = ((mu + 4.0 * sigma) / q).round() as i64;
                let mut support: Vec<ParamValue> =
                    (k_min..=k_max).map(|k| ParamValue::Real(k as f64 * q)).collect();
                for obs in observations {
                    if !support.iter().any(|v| values_match(v, obs, Some(*q))) {
                        support.push((*obs).clone());
                    }
                }
                build_categorical(observations, support, Some(*q), dist)
            } else {
                build_continuous(
                    observations,
                    Distribution::Normal {
                        mu: *mu,
                        sigma: *sigma,
                    },
                    *sigma,
                    floor_frac,
                    None,
                    Some(*q),
                )
            }
        }
        Distribution::Choice { options } => {
            let support = options
                .iter()
                .map(|o| ParamValue::Label(o.clone()))
                .collect();
            build_categorical(observations, support, None, dist)
        }
    }
}

impl ParzenDim {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match self {
            ParzenDim::Continuous {
                centers,
                bandwidths,
                prior,
                clamp,
                quantize_q,
            } => {
                let m = centers.len();
                let comp = rng.random_range(0..=m);
                let mut x = if comp == m {
                    match prior.sample(rng) {
                        ParamValue::Real(v) => v,
                        ParamValue::Label(_) => unreachable!("continuous prior"),
                    }
                } else {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    centers[comp] + bandwidths[comp] * z
                };
                if let Some((lo, hi)) = clamp {
                    x = x.clamp(*lo, *hi);
                }
                if let Some(q) = quantize_q {
                    x = quantize(x, *q);
                }
                ParamValue::Real(x)
            }
            ParzenDim::Categorical { values, masses, .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, m) in values.iter().zip(masses) {
                    acc += m;
                    if u < acc {
                        return v.clone();
                    }
                }
                values.last().expect("support is non-empty").clone()
            }
        }
    }

    fn log_density(&self, value: &ParamValue) -> f64 {
        match self {
            ParzenDim::Continuous {
                centers,
                bandwidths,
                prior,
                ..
            } => {
                let x = match value {
                    ParamValue::Real(v) => *v,
                    ParamValue::Label(_) => return f64::NEG_INFINITY,
                };
                let mut acc = prior.log_density(value).exp();
                for (&c, &b) in centers.iter().zip(bandwidths) {
                    let z = (x - c) / b;
                    acc += (-0.5 * z * z).exp() / (b * (2.0 * PI).sqrt());
                }
                (acc / (centers.len() as f64 + 1.0)).ln()
            }
            ParzenDim::Categorical {
                values,
                masses,
                q,
                dist,
                n_obs,
                norm,
            } => {
                for (v, m) in values.iter().zip(masses) {
                    if values_match(v, value, *q) {
                        return m.ln();
                    }
                }
                (dist.log_density(value).exp() / (n_obs + 1.0) / norm).ln()
            }
        }
    }
}

/// Split history into good/bad sets and build per-dimension estimators.
/// Returns `None` when the bad set would be empty (prior-sampling fallback).
fn tpe_estimators(
    history: &[Trial],
    space: &SearchSpace,
    config: &TpeConfig,
) -> Option<(Vec<ParzenDim>, Vec<ParzenDim>)> {
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&a, &b| history[a].loss.total_cmp(&history[b].loss));
    let n_good = (config.gamma_quantile * history.len() as f64).ceil() as usize;
    if n_good == 0 || n_good >= history.len() {
        return None;
    }
    let (good_idx, bad_idx) = order.split_at(n_good);

    let mut good_dims = Vec::with_capacity(space.len());
    let mut bad_dims = Vec::with_capacity(space.len());
    for (name, dist) in space.dimensions() {
        let collect = |idx: &[usize]| -> Vec<&ParamValue> {
            idx.iter()
                .filter_map(|&i| history[i].params.get(name))
                .collect()
        };
        let good_obs = collect(good_idx);
        let bad_obs = collect(bad_idx);
        good_dims.push(build_parzen(dist, &good_obs, config.kde_bandwidth_floor));
        bad_dims.push(build_parzen(dist, &bad_obs, config.kde_bandwidth_floor));
    }
    Some((good_dims, bad_dims))
}

/// Propose the next configuration from the trial history.
///
/// Draws `n_candidates` assignments from the good-set estimator l and returns
/// the one maximizing sum over dimensions of log l(x) - log g(x). Histories
/// too small to split into good and bad fall back to one prior draw.
pub fn tpe_suggest<R: Rng + ?Sized>(
    history: &[Trial],
    space: &SearchSpace,
    config: &TpeConfig,
    rng: &mut R,
) -> ParamAssignment {
    let Some((good, bad)) = tpe_estimators(history, space, config) else {
        return space.sample(rng);
    };
    let names: Vec<&String> = space.dimensions().keys().collect();
    let mut best: Option<(f64, ParamAssignment)> = None;
    for _ in 0..config.n_candidates.max(1) {
        let values: Vec<ParamValue> = good.iter().map(|dim| dim.sample(rng)).collect();
        let score: f64 = values
            .iter()
            .zip(good.iter().zip(&bad))
            .map(|(v, (l, g))| l.log_density(v) - g.log_density(v))
            .sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            let assignment = ParamAssignment::new(
                names
                    .iter()
                    .map(|n| n.as_str())
                    .zip(values.iter().cloned())
                    .collect::<Vec<_>>(),
            );
            best = Some((score, assignment));
        }
    }
    best.expect("at least one candidate is drawn").1
}
