//! The hyperparameter response function: one configuration in, one
//! cross-validated mean Gini out.

use std::collections::HashSet;
use std::time::Instant;

use crate::data::{stratified_kfold_on, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::gbt::{self, GbtHyperParams};
use crate::metrics;
use crate::spaces::{Distribution, ParamAssignment, SearchSpace};

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub params: ParamAssignment,
    /// Per-fold Gini scores; empty for synthetic (non-CV) objectives.
    pub fold_ginis: Vec<f64>,
    pub mean_gini: f64,
    /// Minimized quantity: always `-mean_gini`.
    pub loss: f64,
    pub wall_seconds: f64,
    pub index: usize,
}

/// Everything needed to evaluate configurations on one row subset.
#[derive(Debug, Clone)]
pub struct ObjectiveContext<'a> {
    pub dataset: &'a Dataset,
    /// Rows visible to this objective (full data or a stratified sample).
    pub subset: Vec<usize>,
    /// Folds over `subset`; indices are absolute dataset rows.
    pub fold_plan: FoldPlan,
    pub space: SearchSpace,
    /// Learner settings for knobs the space does not tune.
    pub defaults: GbtHyperParams,
    /// Per-trial learner seed = `run_seed ^ trial index`.
    pub run_seed: u64,
}

impl<'a> ObjectiveContext<'a> {
    /// Build a context, checking that the fold plan stays inside the subset.
    pub fn new(
        dataset: &'a Dataset,
        subset: Vec<usize>,
        fold_plan: FoldPlan,
        space: SearchSpace,
        defaults: GbtHyperParams,
        run_seed: u64,
    ) -> Result<Self> {
        let members: HashSet<usize> = subset.iter().copied().collect();
        for fold in &fold_plan.folds {
            for &r in fold.train.iter().chain(&fold.test) {
                if !members.contains(&r) {
                    return Err(Error::InvalidArgument(format!(
                        "fold plan references row {r} outside the objective's subset"
                    )));
                }
            }
        }
        Ok(ObjectiveContext {
            dataset,
            subset,
            fold_plan,
            space,
            defaults,
            run_seed,
        })
    }

    /// Context over an explicit row subset, folding it with `seed`.
    pub fn on_rows(
        dataset: &'a Dataset,
        subset: Vec<usize>,
        k: usize,
        space: SearchSpace,
        defaults: GbtHyperParams,
        seed: u64,
    ) -> Result<Self> {
        let fold_plan = stratified_kfold_on(dataset, &subset, k, seed)?;
        ObjectiveContext::new(dataset, subset, fold_plan, space, defaults, seed)
    }

    /// Context over the full dataset.
    pub fn on_full(
        dataset: &'a Dataset,
        k: usize,
        space: SearchSpace,
        defaults: GbtHyperParams,
        seed: u64,
    ) -> Result<Self> {
        let all: Vec<usize> = (0..dataset.n_rows()).collect();
        ObjectiveContext::on_rows(dataset, all, k, space, defaults, seed)
    }
}

/// The stock tuning space for the built-in learner.
pub fn default_space() -> SearchSpace {
    SearchSpace::new(vec![
        ("eta", Distribution::LogUniform { lo: 0.005, hi: 0.3 }),
        (
            "max_depth",
            Distribution::QUniform {
                lo: 2.0,
                hi: 10.0,
                q: 1.0,
            },
        ),
        (
            "min_child_weight",
            Distribution::QUniform {
                lo: 1.0,
                hi: 10.0,
                q: 1.0,
            },
        ),
        ("subsample", Distribution::Uniform { lo: 0.5, hi: 1.0 }),
        ("colsample", Distribution::Uniform { lo: 0.5, hi: 1.0 }),
        (
            "l2_reg",
            Distribution::LogUniform {
                lo: 1e-3,
                hi: 10.0,
            },
        ),
        ("min_split_gain", Distribution::Uniform { lo: 0.0, hi: 5.0 }),
        (
            "n_rounds",
            Distribution::QUniform {
                lo: 50.0,
                hi: 300.0,
                q: 50.0,
            },
        ),
    ])
    .expect("the built-in space is statically valid")
}

/// Map an assignment onto learner settings, clamping values from unbounded
/// distributions into the learner's legal ranges.
pub fn apply_params(defaults: &GbtHyperParams, params: &ParamAssignment) -> Result<GbtHyperParams> {
    let mut hp = defaults.clone();
    for (name, value) in params.iter() {
        let num = value.as_real().ok_or_else(|| {
            Error::InvalidArgument(format!("hyperparameter `{name}` must be numeric"))
        })?;
        match name.as_str() {
            "eta" => hp.eta = num.clamp(1e-6, 1.0),
            "max_depth" => hp.max_depth = num.round().clamp(1.0, 64.0) as usize,
            "min_child_weight" => hp.min_child_weight = num.max(0.0),
            "min_split_gain" => hp.min_split_gain = num.max(0.0),
            "l2_reg" => hp.l2_reg = num.max(0.0),
            "subsample" => hp.subsample = num.clamp(0.01, 1.0),
            "colsample" => hp.colsample = num.clamp(0.01, 1.0),
            "n_rounds" => hp.n_rounds = num.round().max(0.0) as usize,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown hyperparameter `{other}` (the learner tunes eta, max_depth, \
                     min_child_weight, min_split_gain, l2_reg, subsample, colsample, n_rounds)"
                )))
            }
        }
    }
    hp.validate()?;
    Ok(hp)
}

/// Evaluate one configuration: train and score every fold, then average.
pub fn evaluate(ctx: &ObjectiveContext, params: &ParamAssignment, index: usize) -> Result<Trial> {
    let started = Instant::now();
    let mut hp = apply_params(&ctx.defaults, params)?;
    hp.seed = ctx.run_seed ^ index as u64;
    let mut fold_ginis = Vec::with_capacity(ctx.fold_plan.folds.len());
    for fold in &ctx.fold_plan.folds {
        let model = gbt::train(ctx.dataset, &fold.train, &hp)?;
        let probs = gbt::predict_proba(&model, ctx.dataset, &fold.test)?;
        let labels: Vec<u8> = fold.test.iter().map(|&r| ctx.dataset.label(r)).collect();
        let auc = metrics::roc_auc(&probs, &labels)?;
        fold_ginis.push(metrics::gini(auc)?);
    }
    let mean_gini = metrics::mean_gini(&fold_ginis)?;
    Ok(Trial {
        params: params.clone(),
        fold_ginis,
        mean_gini,
        loss: -mean_gini,
        wall_seconds: started.elapsed().as_secs_f64(),
        index,
    })
}
