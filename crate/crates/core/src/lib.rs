//! Hyperparameter tuning for gradient boosted trees.
//!
//! The crate bundles four tuners — exhaustive grid search, random search,
//! sequential model-based optimization (SMBO) driven by a Tree-structured
//! Parzen Estimator, and a subsample-accelerated variant that tunes on a
//! stratified fraction of the data before re-scoring on the full set — around
//! a built-in second-order gradient boosted tree classifier, stratified
//! K-fold cross-validation, and Gini scoring. A benchmark runner compares
//! methods and subsampling rates and writes CSV/markdown reports; the
//! `gbtune` binary exposes everything on the command line.

// Validation rejects NaN by negating `>=`/`<=` comparisons (`!(x >= 0.0)` is
// true for NaN, `x < 0.0` is not), so the "partial-ord negation" lint flags
// exactly the behaviour we rely on.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod error;
pub mod gbt;
pub mod metrics;
pub mod objective;
pub mod spaces;
pub mod tuners;

pub use error::{Error, Result};
