//! A desk-scale gradient-boosted decision-tree binary classifier.
//!
//! Second-order (Newton) boosting with logistic loss and exact greedy split
//! search: per round, gradients g = p − y and hessians h = p(1 − p) are
//! computed from the current margins, rows and features are subsampled, and
//! each tree level is grown with two presorted passes per feature — one to
//! total the feature-present gradient mass per node, one to score every
//! midpoint threshold with the missing rows routed to whichever side gains
//! more.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Logistic sigmoid.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Mean binary cross-entropy of predicted probabilities.
pub fn logloss(probs: &[f64], labels: &[u8]) -> f64 {
    let n = probs.len() as f64;
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(1e-15, 1.0 - 1e-15);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Learner settings; every range constraint is enforced by [`validate`].
///
/// [`validate`]: GbtHyperParams::validate
#[derive(Debug, Clone, PartialEq)]
pub struct GbtHyperParams {
    /// Shrinkage applied to every leaf, in (0, 1].
    pub eta: f64,
    /// Number of boosting rounds (trees).
    pub n_rounds: usize,
    /// Maximum tree depth, >= 1.
    pub max_depth: usize,
    /// Minimum hessian sum per child, >= 0.
    pub min_child_weight: f64,
    /// Minimum gain for a split to be kept, >= 0 (the "gamma" knob).
    pub min_split_gain: f64,
    /// L2 leaf-weight penalty lambda, >= 0.
    pub l2_reg: f64,
    /// Row fraction per round, in (0, 1].
    pub subsample: f64,
    /// Feature fraction per round, in (0, 1].
    pub colsample: f64,
    /// Prior log-odds; `None` uses the training subset's observed log-odds.
    pub base_score: Option<f64>,
    pub seed: u64,
}

impl Default for GbtHyperParams {
    fn default() -> Self {
        GbtHyperParams {
            eta: 0.3,
            n_rounds: 100,
            max_depth: 6,
            min_child_weight: 1.0,
            min_split_gain: 0.0,
            l2_reg: 1.0,
            subsample: 1.0,
            colsample: 1.0,
            base_score: None,
            seed: 0,
        }
    }
}

impl GbtHyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must be in (0, 1], got {}", self.eta));
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1".into());
        }
        if !(self.min_child_weight >= 0.0) {
            return bad(format!(
                "min_child_weight must be >= 0, got {}",
                self.min_child_weight
            ));
        }
        if !(self.min_split_gain >= 0.0) {
            return bad(format!(
                "min_split_gain must be >= 0, got {}",
                self.min_split_gain
            ));
        }
        if !(self.l2_reg >= 0.0) {
            return bad(format!("l2_reg must be >= 0, got {}", self.l2_reg));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad(format!("subsample must be in (0, 1], got {}", self.subsample));
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad(format!("colsample must be in (0, 1], got {}", self.colsample));
        }
        if let Some(b) = self.base_score {
            if !b.is_finite() {
                return bad(format!("base_score must be finite, got {b}"));
            }
        }
        Ok(())
    }
}

/// One tree node; children are arena indices into [`Tree::nodes`].
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Where rows with a missing value for `feature` go.
        default_left: bool,
        left: usize,
        right: usize,
        /// The split's evaluated gain, kept for introspection.
        gain: f64,
    },
    Leaf {
        /// Eta-scaled output.
        weight: f64,
    },
}

/// One regression tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Margin contribution for one dataset row.
    pub fn output(&self, ds: &Dataset, row: usize) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { weight } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let go_left = if ds.is_missing(row, *feature) {
                        *default_left
                    } else {
                        ds.value(row, *feature) < *threshold
                    };
                    idx = if go_left { *left } else { *right };
                }
            }
        }
    }

    fn node_json(&self, idx: usize) -> serde_json::Value {
        match &self.nodes[idx] {
            Node::Leaf { weight } => json!({ "weight": weight }),
            Node::Split {
                feature,
                threshold,
                default_left,
                left,
                right,
                gain,
            } => json!({
                "feature": feature,
                "threshold": threshold,
                "default": if *default_left { "left" } else { "right" },
                "gain": gain,
                "left": self.node_json(*left),
                "right": self.node_json(*right),
            }),
        }
    }
}

/// A trained boosted ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub feature_count: usize,
}

impl GbtModel {
    /// Raw additive score for one row.
    pub fn margin(&self, ds: &Dataset, row: usize) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.output(ds, row)).sum::<f64>()
    }

    /// Predicted probability for one row, clamped strictly inside (0, 1).
    pub fn predict_row(&self, ds: &Dataset, row: usize) -> f64 {
        sigmoid(self.margin(ds, row)).clamp(1e-15, 1.0 - 1e-15)
    }

    /// JSON dump of the full tree structure, for test introspection.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "base_score": self.base_score,
            "feature_count": self.feature_count,
            "trees": self.trees.iter().map(|t| t.node_json(0)).collect::<Vec<_>>(),
        })
    }
}

/// Predicted probabilities for a row subset.
pub fn predict_proba(model: &GbtModel, ds: &Dataset, rows: &[usize]) -> Result<Vec<f64>> {
    if model.feature_count != ds.n_features() {
        return Err(Error::FeatureCountMismatch {
            expected: model.feature_count,
            found: ds.n_features(),
        });
    }
    Ok(rows.iter().map(|&r| model.predict_row(ds, r)).collect())
}

const INACTIVE: u32 = u32::MAX;

/// A split candidate chosen for one frontier node.
#[derive(Clone, Copy)]
struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
    default_left: bool,
    /// Gradient/hessian sums of the left child under the chosen routing.
    g_left: f64,
    h_left: f64,
}

struct Trainer<'a> {
    ds: &'a Dataset,
    rows: &'a [usize],
    /// Per feature: `(value, subset position)` sorted by value, missing
    /// rows excluded.
    sorted: Vec<Vec<(f64, u32)>>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    node_of: Vec<u32>,
}

struct GrowNode {
    arena_idx: usize,
    g: f64,
    h: f64,
}

/// Row-routing data for a freshly materialized split:
/// (feature, threshold, default_left, left arena id, right arena id).
type SplitRoute = (usize, f64, bool, u32, u32);

impl Trainer<'_> {
    fn split_gain(&self, p: &GbtHyperParams, gl: f64, hl: f64, gr: f64, hr: f64) -> f64 {
        let lambda = p.l2_reg;
        0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda)
            - (gl + gr) * (gl + gr) / (hl + hr + lambda))
    }

    /// Consider one threshold for one frontier node, trying both missing
    /// routings; ties prefer routing left, and strictly greater gain is
    /// required to displace the incumbent (so the lowest feature index and
    /// lowest threshold win overall ties).
    #[allow(clippy::too_many_arguments)]
    fn consider(
        &self,
        p: &GbtHyperParams,
        best: &mut Option<BestSplit>,
        node: &GrowNode,
        feature: usize,
        threshold: f64,
        gl_present: f64,
        hl_present: f64,
        g_missing: f64,
        h_missing: f64,
    ) {
        let g_total = node.g;
        let h_total = node.h;
        for default_left in [true, false] {
            let (gl, hl) = if default_left {
                (gl_present + g_missing, hl_present + h_missing)
            } else {
                (gl_present, hl_present)
            };
            let (gr, hr) = (g_total - gl, h_total - hl);
            if hl < p.min_child_weight || hr < p.min_child_weight {
                continue;
            }
            let gain = self.split_gain(p, gl, hl, gr, hr);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                *best = Some(BestSplit {
                    gain,
                    feature,
                    threshold,
                    default_left,
                    g_left: gl,
                    h_left: hl,
                });
            }
        }
    }

    fn build_tree(&mut self, p: &GbtHyperParams, cols: &[usize], active: &[u32]) -> Tree {
        let mut arena: Vec<Node> = vec![Node::Leaf { weight: 0.0 }];
        let (mut g0, mut h0) = (0.0, 0.0);
        for &i in active {
            g0 += self.grad[i as usize];
            h0 += self.hess[i as usize];
        }
        let mut frontier = vec![GrowNode {
            arena_idx: 0,
            g: g0,
            h: h0,
        }];

        let leaf_weight = |g: f64, h: f64| -p.eta * g / (h + p.l2_reg);

        for depth in 0..=p.max_depth {
            if frontier.is_empty() {
                break;
            }
            // Frontier arena indices are contiguous: children are pushed in
            // slot order, so slot = arena_idx - frontier_base.
            let frontier_base = frontier[0].arena_idx;
            let m = frontier.len();

            if depth == p.max_depth {
                for node in &frontier {
                    arena[node.arena_idx] = Node::Leaf {
                        weight: leaf_weight(node.g, node.h),
                    };
                }
                for nid in self.node_of.iter_mut() {
                    if *nid != INACTIVE && *nid as usize >= frontier_base {
                        *nid = INACTIVE;
                    }
                }
                break;
            }

            let mut best: Vec<Option<BestSplit>> = vec![None; m];
            let mut g_present = vec![0.0; m];
            let mut h_present = vec![0.0; m];
            let mut g_left = vec![0.0; m];
            let mut h_left = vec![0.0; m];
            let mut prev_value = vec![f64::NAN; m];

            for &f in cols {
                for v in g_present.iter_mut() {
                    *v = 0.0;
                }
                for v in h_present.iter_mut() {
                    *v = 0.0;
                }
                // Pass 1: per-node totals over rows where feature f is present.
                for &(_, pos) in &self.sorted[f] {
                    let nid = self.node_of[pos as usize];
                    if nid == INACTIVE || (nid as usize) < frontier_base {
                        continue;
                    }
                    let slot = nid as usize - frontier_base;
                    g_present[slot] += self.grad[pos as usize];
                    h_present[slot] += self.hess[pos as usize];
                }
                // Pass 2: score a midpoint threshold between every pair of
                // consecutive distinct values within each node.
                for v in g_left.iter_mut() {
                    *v = 0.0;
                }
                for v in h_left.iter_mut() {
                    *v = 0.0;
                }
                for v in prev_value.iter_mut() {
                    *v = f64::NAN;
                }
                for &(value, pos) in &self.sorted[f] {
                    let nid = self.node_of[pos as usize];
                    if nid == INACTIVE || (nid as usize) < frontier_base {
                        continue;
                    }
                    let slot = nid as usize - frontier_base;
                    let pv = prev_value[slot];
                    if !pv.is_nan() && value > pv {
                        let node = &frontier[slot];
                        self.consider(
                            p,
                            &mut best[slot],
                            node,
                            f,
                            0.5 * (pv + value),
                            g_left[slot],
                            h_left[slot],
                            node.g - g_present[slot],
                            node.h - h_present[slot],
                        );
                    }
                    g_left[slot] += self.grad[pos as usize];
                    h_left[slot] += self.hess[pos as usize];
                    prev_value[slot] = value;
                }
            }

            // Materialize: split qualifying nodes, finalize the rest.
            let mut next_frontier = Vec::new();
            let mut split_info: Vec<Option<SplitRoute>> = vec![None; m];
            for (slot, node) in frontier.iter().enumerate() {
                let accepted = best[slot]
                    .as_ref()
                    .filter(|b| b.gain > p.min_split_gain)
                    .copied();
                match accepted {
                    Some(b) => {
                        let left_idx = arena.len();
                        arena.push(Node::Leaf { weight: 0.0 });
                        let right_idx = arena.len();
                        arena.push(Node::Leaf { weight: 0.0 });
                        arena[node.arena_idx] = Node::Split {
                            feature: b.feature,
                            threshold: b.threshold,
                            default_left: b.default_left,
                            left: left_idx,
                            right: right_idx,
                            gain: b.gain,
                        };
                        split_info[slot] = Some((
                            b.feature,
                            b.threshold,
                            b.default_left,
                            left_idx as u32,
                            right_idx as u32,
                        ));
                        next_frontier.push(GrowNode {
                            arena_idx: left_idx,
                            g: b.g_left,
                            h: b.h_left,
                        });
                        next_frontier.push(GrowNode {
                            arena_idx: right_idx,
                            g: node.g - b.g_left,
                            h: node.h - b.h_left,
                        });
                    }
                    None => {
                        arena[node.arena_idx] = Node::Leaf {
                            weight: leaf_weight(node.g, node.h),
                        };
                    }
                }
            }

            // Route rows to their child node, or retire them with the leaf.
            for pos in 0..self.node_of.len() {
                let nid = self.node_of[pos];
                if nid == INACTIVE || (nid as usize) < frontier_base {
                    continue;
                }
                let slot = nid as usize - frontier_base;
                match split_info[slot] {
                    Some((f, thr, default_left, left_id, right_id)) => {
                        let row = self.rows[pos];
                        let go_left = if self.ds.is_missing(row, f) {
                            default_left
                        } else {
                            self.ds.value(row, f) < thr
                        };
                        self.node_of[pos] = if go_left { left_id } else { right_id };
                    }
                    None => self.node_of[pos] = INACTIVE,
                }
            }

            frontier = next_frontier;
        }

        Tree { nodes: arena }
    }
}

/// Train a boosted model on the given row subset.
pub fn train(ds: &Dataset, rows: &[usize], params: &GbtHyperParams) -> Result<GbtModel> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "training subset must be non-empty".into(),
        ));
    }
    let n = rows.len();
    let n_pos = rows.iter().filter(|&&r| ds.label(r) == 1).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClassTarget);
    }
    let base_score = params.base_score.unwrap_or_else(|| {
        let p = n_pos as f64 / n as f64;
        (p / (1.0 - p)).ln()
    });
    let nf = ds.n_features();

    let sorted = (0..nf)
        .map(|f| {
            let mut col: Vec<(f64, u32)> = rows
                .iter()
                .enumerate()
                .filter(|&(_, &r)| !ds.is_missing(r, f))
                .map(|(pos, &r)| (ds.value(r, f), pos as u32))
                .collect();
            // Stable by-value sort keeps equal-value runs in position order,
            // making accumulation order (and float sums) reproducible.
            col.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("feature values must not be NaN"));
            col
        })
        .collect();

    let labels: Vec<f64> = rows.iter().map(|&r| ds.label(r) as f64).collect();
    let mut margins = vec![base_score; n];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trainer = Trainer {
        ds,
        rows,
        sorted,
        grad: vec![0.0; n],
        hess: vec![0.0; n],
        node_of: vec![INACTIVE; n],
    };
    let mut trees = Vec::with_capacity(params.n_rounds);

    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            trainer.grad[i] = p - labels[i];
            trainer.hess[i] = p * (1.0 - p);
        }

        let n_active = ((params.subsample * n as f64).round() as usize).clamp(1, n);
        let active: Vec<u32> = if n_active == n {
            (0..n as u32).collect()
        } else {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.shuffle(&mut rng);
            idx.truncate(n_active);
            idx
        };
        for v in trainer.node_of.iter_mut() {
            *v = INACTIVE;
        }
        for &i in &active {
            trainer.node_of[i as usize] = 0;
        }

        let n_cols = ((params.colsample * nf as f64).round() as usize).clamp(1, nf);
        let cols: Vec<usize> = if n_cols == nf {
            (0..nf).collect()
        } else {
            let mut c: Vec<usize> = (0..nf).collect();
            c.shuffle(&mut rng);
            c.truncate(n_cols);
            // Ascending order so equal-gain ties resolve to the lowest
            // feature index.
            c.sort_unstable();
            c
        };

        let tree = trainer.build_tree(params, &cols, &active);
        for (pos, margin) in margins.iter_mut().enumerate() {
            *margin += tree.output(ds, rows[pos]);
        }
        trees.push(tree);
    }

    Ok(GbtModel {
        base_score,
        trees,
        feature_count: nf,
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Seeded training is reproducible and predictions stay in (0,1).
        #[test]
        fn deterministic_and_bounded(
            n in 20usize..80,
            seed in any::<u64>(),
            subsample in 0.5..1.0f64,
            eta in 0.05..0.5f64,
        ) {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| vec![((i * 13 + 5) % 31) as f64, ((i * 7 + 2) % 17) as f64])
                .collect();
            let labels: Vec<u8> = (0..n).map(|i| u8::from((i * 13 + 5) % 31 > 15)).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let ds = Dataset::from_rows(&rows, labels).unwrap();
            let params = GbtHyperParams {
                n_rounds: 5,
                max_depth: 3,
                eta,
                subsample,
                seed,
                ..GbtHyperParams::default()
            };
            let all: Vec<usize> = (0..n).collect();
            let m1 = train(&ds, &all, &params).unwrap();
            let m2 = train(&ds, &all, &params).unwrap();
            let p1 = predict_proba(&m1, &ds, &all).unwrap();
            let p2 = predict_proba(&m2, &ds, &all).unwrap();
            prop_assert_eq!(&p1, &p2);
            prop_assert!(p1.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }
}
