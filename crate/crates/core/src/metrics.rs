//! Fit metrics and significance summaries.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::inference::InferenceTable;
use crate::lasso::FeatureGroup;
use crate::linalg::gaussian_matrix;

/// AUROC by the Mann-Whitney rank statistic with average-rank tie handling:
/// the probability that a random positive outranks a random negative.
pub fn auroc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(CoreError::invalid("auroc", "length mismatch"));
    }
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CoreError::invalid("auroc", "both classes required"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Average ranks over tie groups (1-based ranks).
    let mut rank = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            rank[idx] = avg;
        }
        i = j + 1;
    }

    let rank_sum_pos: f64 = (0..n).filter(|&i| labels[i] == 1.0).map(|i| rank[i]).sum();
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Per-group significance summary of an inference table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: FeatureGroup,
    /// Columns of this group in the design.
    pub n_total: usize,
    /// Active-set members of this group.
    pub n_selected: usize,
    /// Count of p < alpha (strict), one per requested alpha.
    pub n_significant: Vec<usize>,
    /// Median over selected members; lower-middle convention.
    pub median_coefficient: Option<f64>,
    pub median_p_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auroc: Option<f64>,
    pub median_deviance_ratio: Option<f64>,
    pub n_selected: usize,
    pub alphas: Vec<f64>,
    pub groups: Vec<GroupSummary>,
    pub n_degenerate: usize,
}

fn lower_median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(values[(values.len() - 1) / 2])
}

/// Counts significant rows per alpha and summarizes medians per group. The
/// medians run over selected variables only (the rows of the table).
pub fn significance_summary(
    table: &InferenceTable,
    alphas: &[f64],
    group_totals: &[(FeatureGroup, usize)],
) -> Vec<GroupSummary> {
    group_totals
        .iter()
        .map(|&(group, n_total)| {
            let rows: Vec<_> = table.rows.iter().filter(|r| r.group == group).collect();
            let n_significant = alphas
                .iter()
                .map(|&a| {
                    rows.iter()
                        .filter(|r| r.p_value.map(|p| p < a).unwrap_or(false))
                        .count()
                })
                .collect();
            let mut coefs: Vec<f64> = rows.iter().map(|r| r.coefficient).collect();
            let mut ps: Vec<f64> = rows.iter().filter_map(|r| r.p_value).collect();
            GroupSummary {
                group,
                n_total,
                n_selected: rows.len(),
                n_significant,
                median_coefficient: lower_median(&mut coefs),
                median_p_value: lower_median(&mut ps),
            }
        })
        .collect()
}

/// i.i.d. standard Gaussian placebo columns, deterministic per seed.
pub fn white_noise_features(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    gaussian_matrix(n, k, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{InferenceRow, TestKind};
    use rand::Rng;

    /// Brute-force pairwise concordance oracle (ties count half).
    fn auroc_pairwise(scores: &[f64], labels: &[f64]) -> f64 {
        let pos: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == 1.0)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == 0.0)
            .map(|(&s, _)| s)
            .collect();
        let mut acc = 0.0;
        for &p in &pos {
            for &q in &neg {
                acc += if p > q {
                    1.0
                } else if p == q {
                    0.5
                } else {
                    0.0
                };
            }
        }
        acc / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn perfect_separation_scores_one() {
        let labels = vec![0.0, 0.0, 1.0, 1.0];
        let scores = vec![0.1, 0.2, 0.8, 0.9];
        assert_eq!(auroc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn all_ties_score_half() {
        let labels = vec![0.0, 1.0, 0.0, 1.0];
        let scores = vec![0.5, 0.5, 0.5, 0.5];
        assert_eq!(auroc(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn matches_pairwise_oracle_with_ties() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for trial in 0..50 {
            let n = 30;
            let labels: Vec<f64> = (0..n)
                .map(|i| if i == 0 {
                    1.0
                } else if i == 1 {
                    0.0
                } else if rng.random::<f64>() < 0.5 {
                    1.0
                } else {
                    0.0
                })
                .collect();
            // Coarse grid forces ties.
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random::<f64>() * 8.0).round() / 8.0)
                .collect();
            let fast = auroc(&scores, &labels).unwrap();
            let slow = auroc_pairwise(&scores, &labels);
            assert!((fast - slow).abs() < 1e-12, "trial {trial}: {fast} vs {slow}");
        }
    }

    #[test]
    fn complement_symmetry_without_ties() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let n = 40;
        let labels: Vec<f64> = (0..n).map(|i| if i < 15 { 1.0 } else { 0.0 }).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let flipped: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
        let a1 = auroc(&scores, &labels).unwrap();
        let a2 = auroc(&flipped, &labels).unwrap();
        assert!((a1 + a2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        assert!(auroc(&[0.1, 0.2], &[1.0, 1.0]).is_err());
    }

    fn row(group: FeatureGroup, coef: f64, p: Option<f64>) -> InferenceRow {
        InferenceRow {
            name: "v".into(),
            column: 0,
            group,
            coefficient: coef,
            p_value: p,
            ci_low: None,
            ci_high: None,
            sign: 1,
            kind: TestKind::Selective,
            degenerate: p.is_none(),
        }
    }

    #[test]
    fn significance_counts_with_strict_inequality() {
        let table = InferenceTable {
            rows: vec![
                row(FeatureGroup::Topic, 0.5, Some(0.001)),
                row(FeatureGroup::Topic, -0.2, Some(0.03)),
                row(FeatureGroup::Topic, 0.1, Some(0.2)),
            ],
            alpha: 0.05,
            lambda: 1.0,
            n_degenerate: 0,
        };
        let s = significance_summary(&table, &[0.05, 0.01, 0.001], &[(FeatureGroup::Topic, 10)]);
        // p = 0.001 is excluded at alpha = 0.001 by the strict inequality.
        assert_eq!(s[0].n_significant, vec![2, 1, 0]);
        assert_eq!(s[0].n_selected, 3);
        assert_eq!(s[0].n_total, 10);
    }

    #[test]
    fn empty_table_gives_zeros() {
        let table = InferenceTable::empty(0.05, 1.0);
        let s = significance_summary(&table, &[0.05], &[(FeatureGroup::Covariate, 4)]);
        assert_eq!(s[0].n_significant, vec![0]);
        assert_eq!(s[0].n_selected, 0);
        assert!(s[0].median_coefficient.is_none());
    }

    #[test]
    fn counts_nested_across_alphas() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rows: Vec<InferenceRow> = (0..15)
                .map(|_| row(FeatureGroup::Topic, 0.0, Some(rng.random::<f64>())))
                .collect();
            let table = InferenceTable {
                rows,
                alpha: 0.05,
                lambda: 1.0,
                n_degenerate: 0,
            };
            let s =
                significance_summary(&table, &[0.05, 0.01, 0.001], &[(FeatureGroup::Topic, 15)]);
            let c = &s[0].n_significant;
            assert!(c[0] >= c[1] && c[1] >= c[2]);
        }
    }

    #[test]
    fn white_noise_column_means_bounded() {
        let n = 400;
        let w = white_noise_features(n, 10, 4);
        for j in 0..10 {
            let mean = w.column(j).iter().sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "col {j} mean {mean}");
        }
    }

    #[test]
    fn white_noise_deterministic() {
        assert_eq!(white_noise_features(50, 3, 9), white_noise_features(50, 3, 9));
        assert_ne!(white_noise_features(50, 3, 9), white_noise_features(50, 3, 10));
    }
}
