//! Scoring: ROC AUC via the rank-based Mann–Whitney statistic, the Gini
//! transform G = 2·AUC − 1, and fold aggregation.

use crate::error::{Error, Result};

/// One scored cross-validation fold.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFold {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub gini: f64,
}

impl ScoredFold {
    /// Score one fold; fails if lengths differ or a class is absent.
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let auc = roc_auc(&scores, &labels)?;
        Ok(ScoredFold {
            scores,
            labels,
            gini: gini(auc)?,
        })
    }
}

/// ROC AUC as the normalized Mann–Whitney statistic, with average-rank tie
/// correction: (pairs where the positive outscores the negative, ties counted
/// half) / (P·N).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedAuc);
    }

    // Average ranks: sort once, then give each tie group the mean of its
    // 1-based rank range.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores must not be NaN"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let p = pos as f64;
    let n = neg as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Gini score: exactly 2·auc − 1.
pub fn gini(auc: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&auc) {
        return Err(Error::InvalidArgument(format!(
            "AUC must lie in [0, 1], got {auc}"
        )));
    }
    Ok(2.0 * auc - 1.0)
}

/// Arithmetic mean of per-fold Gini scores.
pub fn mean_gini(fold_ginis: &[f64]) -> Result<f64> {
    if fold_ginis.is_empty() {
        return Err(Error::InvalidArgument(
            "mean Gini of an empty fold list is undefined".into(),
        ));
    }
    Ok(fold_ginis.iter().sum::<f64>() / fold_ginis.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(P·N) pairwise Mann–Whitney oracle.
    fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            if yi != 1 {
                continue;
            }
            for (j, &yj) in labels.iter().enumerate() {
                if yj != 0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_ranking_is_one() {
        let auc = roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(auc, 1.0);
        assert_eq!(gini(auc).unwrap(), 1.0);
    }

    #[test]
    fn inverted_ranking_is_zero() {
        let auc = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]).unwrap();
        assert_eq!(auc, 0.0);
        assert_eq!(gini(auc).unwrap(), -1.0);
    }

    #[test]
    fn all_ties_is_half() {
        let auc = roc_auc(&[0.3, 0.3, 0.3, 0.3], &[0, 1, 0, 1]).unwrap();
        assert!((auc - 0.5).abs() < 1e-15);
        assert!(gini(auc).unwrap().abs() < 1e-15);
    }

    #[test]
    fn four_point_oracle() {
        // Brute force over the four (pos, neg) pairs: 0.35>0.1, 0.35<0.4,
        // 0.8>0.1, 0.8>0.4 -> 3/4.
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
        assert!((gini(auc).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_pairwise_oracle_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.random_range(2..200);
            // Coarse score grid so ties actually occur.
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(0..20) as f64) / 20.0)
                .collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            labels[0] = 0;
            labels[n - 1] = 1;
            let fast = roc_auc(&scores, &labels).unwrap();
            let slow = pairwise_auc(&scores, &labels);
            assert!((fast - slow).abs() < 1e-12, "fast {fast} vs oracle {slow}");
        }
    }

    #[test]
    fn invariant_under_increasing_transforms() {
        let scores = [0.1, 0.45, 0.2, 0.9, 0.45, 0.3];
        let labels = [0, 1, 0, 1, 0, 1];
        let base = roc_auc(&scores, &labels).unwrap();
        let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s + 7.0).collect();
        assert!((roc_auc(&exp, &labels).unwrap() - base).abs() < 1e-15);
        assert!((roc_auc(&affine, &labels).unwrap() - base).abs() < 1e-15);
    }

    #[test]
    fn negation_complements_without_ties() {
        let scores = [0.11, 0.42, 0.27, 0.93, 0.55];
        let labels = [0, 1, 0, 1, 1];
        let fwd = roc_auc(&scores, &labels).unwrap();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let rev = roc_auc(&neg, &labels).unwrap();
        assert!((fwd + rev - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[1, 1]),
            Err(Error::UndefinedAuc)
        ));
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[0, 0]),
            Err(Error::UndefinedAuc)
        ));
    }

    #[test]
    fn gini_rejects_out_of_range() {
        assert!(gini(-0.01).is_err());
        assert!(gini(1.01).is_err());
        assert_eq!(gini(0.5).unwrap(), 0.0);
    }

    #[test]
    fn mean_gini_basics() {
        assert_eq!(mean_gini(&[0.4, 0.6]).unwrap(), 0.5);
        assert_eq!(mean_gini(&[0.37]).unwrap(), 0.37);
        assert_eq!(mean_gini(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(mean_gini(&[]).is_err());
    }

    #[test]
    fn scored_fold_carries_gini() {
        let fold = ScoredFold::new(vec![0.1, 0.4, 0.35, 0.8], vec![0, 0, 1, 1]).unwrap();
        assert!((fold.gini - 0.5).abs() < 1e-15);
        assert!(ScoredFold::new(vec![0.1], vec![1]).is_err());
    }
}
