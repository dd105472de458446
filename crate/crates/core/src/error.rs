//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("space definition: dimension `{dimension}`, field `{field}`: {reason}")]
    SpaceFile {
        dimension: String,
        field: String,
        reason: String,
    },

    #[error("dataset file is empty or has no data rows: {path}")]
    EmptyFile { path: PathBuf },

    #[error("target column `{column}` not found in header")]
    MissingTargetColumn { column: String },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number (not a declared missing token)")]
    UnparseableCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, target column: `{value}` is not a valid label")]
    BadTargetValue { row: usize, value: String },

    #[error("target column has a single class; both classes are required")]
    SingleClassTarget,

    #[error("stratification infeasible: class {class} has {count} rows, fewer than {k} folds")]
    StratificationInfeasible { class: u8, count: usize, k: usize },

    #[error("AUC undefined: labels contain a single class")]
    UndefinedAuc,

    #[error("feature count mismatch: model expects {expected}, dataset has {found}")]
    FeatureCountMismatch { expected: usize, found: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
