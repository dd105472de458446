//! Dataset ingestion, one-hot encoding, stratified K-fold splitting, and
//! stratified random subsampling.
//!
//! A [`Dataset`] is immutable after construction: a row-major feature matrix,
//! a parallel missing-value mask, and binary labels. Splitting and sampling
//! are pure functions of their seed, so every consumer sees identical folds
//! for identical inputs.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An immutable binary-classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major `n_rows x n_features`; missing cells hold 0.0 and are
    /// flagged in `missing`, never encoded as magic values.
    features: Vec<f64>,
    missing: Vec<bool>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    n_rows: usize,
    n_features: usize,
}

impl Dataset {
    /// Build from raw parts. Shapes must agree and both classes must appear.
    pub fn from_parts(
        features: Vec<f64>,
        missing: Vec<bool>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n_rows = labels.len();
        let n_features = feature_names.len();
        if features.len() != n_rows * n_features || missing.len() != features.len() {
            return Err(Error::InvalidArgument(format!(
                "shape mismatch: {} rows x {} features needs {} cells, got {} values / {} mask bits",
                n_rows,
                n_features,
                n_rows * n_features,
                features.len(),
                missing.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidArgument(format!(
                "labels must be 0 or 1, got {bad}"
            )));
        }
        if !(labels.contains(&0) && labels.contains(&1)) {
            return Err(Error::SingleClassTarget);
        }
        Ok(Dataset {
            features,
            missing,
            labels,
            feature_names,
            n_rows,
            n_features,
        })
    }

    /// Convenience constructor for dense rows; NaN cells become missing.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n_features = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * n_features);
        let mut missing = Vec::with_capacity(rows.len() * n_features);
        for row in rows {
            if row.len() != n_features {
                return Err(Error::InvalidArgument(
                    "all rows must have the same number of features".into(),
                ));
            }
            for &v in row {
                if v.is_nan() {
                    features.push(0.0);
                    missing.push(true);
                } else {
                    features.push(v);
                    missing.push(false);
                }
            }
        }
        let names = (0..n_features).map(|j| format!("f{j}")).collect();
        Dataset::from_parts(features, missing, labels, names)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> u8 {
        self.labels[row]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.n_features + col]
    }

    #[inline]
    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[row * self.n_features + col]
    }

    /// Rows per class, indexed by label.
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        [self.n_rows - pos, pos]
    }
}

/// Schema options for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    /// Name of the target column.
    pub target: String,
    /// Columns to one-hot encode; all other non-target columns parse as numeric.
    pub categorical: Vec<String>,
    /// Cell tokens (after trimming) treated as missing values.
    pub missing_tokens: Vec<String>,
    /// Target value mapped to class 1; everything else maps to 0. When
    /// absent, the target must already be numeric 0/1.
    pub positive_label: Option<String>,
}

impl CsvSchema {
    pub fn new(target: impl Into<String>) -> Self {
        CsvSchema {
            target: target.into(),
            categorical: Vec::new(),
            missing_tokens: vec!["".into(), "NA".into(), "?".into()],
            positive_label: None,
        }
    }
}

/// Load a headered CSV into a [`Dataset`].
///
/// Categorical columns become one indicator feature per observed level, in
/// sorted level order, named `column=level`. Numeric cells matching a missing
/// token set the mask; anything else that fails to parse is an error naming
/// the row and column. Row numbers in errors are 1-based data rows.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let target_idx = header
        .iter()
        .position(|h| *h == schema.target)
        .ok_or_else(|| Error::MissingTargetColumn {
            column: schema.target.clone(),
        })?;
    for cat in &schema.categorical {
        if !header.iter().any(|h| h == cat) {
            return Err(Error::InvalidArgument(format!(
                "categorical column `{cat}` not found in header"
            )));
        }
    }

    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    if records.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }

    let is_missing = |cell: &str| schema.missing_tokens.iter().any(|t| t == cell);

    // Observed levels per categorical column, sorted for a deterministic
    // encoding order.
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != target_idx).collect();
    let mut levels: Vec<Option<BTreeSet<String>>> = vec![None; header.len()];
    for &j in &feature_cols {
        if schema.categorical.contains(&header[j]) {
            let mut set = BTreeSet::new();
            for rec in &records {
                let cell = rec.get(j).unwrap_or("");
                if !is_missing(cell) {
                    set.insert(cell.to_string());
                }
            }
            levels[j] = Some(set);
        }
    }

    let mut feature_names = Vec::new();
    for &j in &feature_cols {
        match &levels[j] {
            Some(set) => {
                feature_names.extend(set.iter().map(|l| format!("{}={}", header[j], l)))
            }
            None => feature_names.push(header[j].clone()),
        }
    }

    let n_features = feature_names.len();
    let mut features = Vec::with_capacity(records.len() * n_features);
    let mut missing = Vec::with_capacity(records.len() * n_features);
    let mut labels = Vec::with_capacity(records.len());

    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        for &j in &feature_cols {
            let cell = rec.get(j).unwrap_or("");
            match &levels[j] {
                Some(set) => {
                    if is_missing(cell) {
                        features.extend(std::iter::repeat_n(0.0, set.len()));
                        missing.extend(std::iter::repeat_n(true, set.len()));
                    } else {
                        for level in set {
                            features.push(if level == cell { 1.0 } else { 0.0 });
                            missing.push(false);
                        }
                    }
                }
                None => {
                    if is_missing(cell) {
                        features.push(0.0);
                        missing.push(true);
                    } else {
                        match cell.parse::<f64>() {
                            Ok(v) => {
                                features.push(v);
                                missing.push(false);
                            }
                            Err(_) => {
                                return Err(Error::UnparseableCell {
                                    row,
                                    column: header[j].clone(),
                                    value: cell.to_string(),
                                })
                            }
                        }
                    }
                }
            }
        }
        let cell = rec.get(target_idx).unwrap_or("");
        let label = match &schema.positive_label {
            Some(pos) => {
                if is_missing(cell) {
                    return Err(Error::BadTargetValue {
                        row,
                        value: cell.to_string(),
                    });
                }
                u8::from(cell == pos)
            }
            None => match cell.parse::<f64>() {
                Ok(0.0) => 0,
                Ok(1.0) => 1,
                _ => {
                    return Err(Error::BadTargetValue {
                        row,
                        value: cell.to_string(),
                    })
                }
            },
        };
        labels.push(label);
    }

    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClassTarget);
    }
    Dataset::from_parts(features, missing, labels, feature_names)
}

/// One cross-validation fold: absolute row indices into the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// A complete K-fold split plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
    pub k: usize,
    pub seed: u64,
}

/// Stratified K-fold over the whole dataset.
pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let all: Vec<usize> = (0..dataset.n_rows()).collect();
    stratified_kfold_on(dataset, &all, k, seed)
}

/// Stratified K-fold over a row subset; fold indices are absolute dataset
/// rows drawn from `subset`.
///
/// Within each class, subset members are shuffled by the seed and dealt
/// round-robin to the K test folds, so per-class test counts differ by at
/// most one.
pub fn stratified_kfold_on(
    dataset: &Dataset,
    subset: &[usize],
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "stratified K-fold needs K >= 2, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_sets: Vec<Vec<usize>> = vec![Vec::new(); k];
    for class in 0..=1u8 {
        let mut members: Vec<usize> = subset
            .iter()
            .copied()
            .filter(|&r| dataset.label(r) == class)
            .collect();
        if members.len() < k {
            return Err(Error::StratificationInfeasible {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for (i, row) in members.into_iter().enumerate() {
            test_sets[i % k].push(row);
        }
    }
    let folds = test_sets
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train: Vec<usize> = subset
                .iter()
                .copied()
                .filter(|r| test.binary_search(r).is_err())
                .collect();
            Fold { train, test }
        })
        .collect();
    Ok(FoldPlan { folds, k, seed })
}

/// Stratified random subsample: per class, exactly `max(1, round(rate *
/// count))` indices chosen uniformly without replacement. Output sorted
/// ascending; deterministic given seed.
pub fn stratified_sample(dataset: &Dataset, rate: f64, seed: u64) -> Result<Vec<usize>> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must be in (0, 1], got {rate}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::new();
    for class in 0..=1u8 {
        let mut members: Vec<usize> = (0..dataset.n_rows())
            .filter(|&r| dataset.label(r) == class)
            .collect();
        let want = ((rate * members.len() as f64).round() as usize).max(1);
        members.shuffle(&mut rng);
        members.truncate(want);
        picked.extend(members);
    }
    picked.sort_unstable();
    Ok(picked)
}
