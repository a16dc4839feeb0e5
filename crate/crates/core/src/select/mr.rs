//! Marginal relevance: per-feature between-class over within-class sum of
//! squares.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{FeatureSubset, Provenance};
use crate::dataset::class_counts;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrRanking {
    /// Non-negative; `+inf` when a feature has zero within-class spread but
    /// distinct class means.
    pub scores: Vec<f64>,
    /// Features by descending score, ties by ascending index.
    pub order: Vec<usize>,
}

pub fn mr_scores(x: &DMatrix<f64>, labels: &[usize], n_classes: usize) -> Result<MrRanking> {
    let (n, p) = x.shape();
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!("{n} rows but {} labels", labels.len())));
    }
    let counts = class_counts(labels, n_classes);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::InvalidArgument(
            "marginal relevance needs at least two populated classes".into(),
        ));
    }
    let scores: Vec<f64> = (0..p)
        .map(|j| {
            let col = x.column(j);
            let overall = col.sum() / n as f64;
            let mut sums = vec![0.0; n_classes];
            for (v, &l) in col.iter().zip(labels) {
                sums[l] += v;
            }
            let means: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect();
            let bss: f64 = means
                .iter()
                .zip(&counts)
                .map(|(m, &c)| c as f64 * (m - overall).powi(2))
                .sum();
            let wss: f64 = col
                .iter()
                .zip(labels)
                .map(|(v, &l)| (v - means[l]).powi(2))
                .sum();
            if wss > 0.0 {
                bss / wss
            } else if bss > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(MrRanking { scores, order })
}

impl MrRanking {
    /// The `count` highest-ranked features.
    pub fn top(&self, count: usize) -> Result<FeatureSubset> {
        if count > self.order.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot select {count} of {} features",
                self.order.len()
            )));
        }
        Ok(FeatureSubset::new(Provenance::Mr, self.order[..count].to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_labels, random_matrix};

    #[test]
    fn constant_feature_scores_zero() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 5.0, 1.0, 6.0]);
        let r = mr_scores(&x, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(r.scores[0], 0.0);
        assert!(r.scores[1] > 0.0);
    }

    #[test]
    fn zero_within_spread_is_infinite_and_first() {
        let x = DMatrix::from_row_slice(4, 3, &[
            0.1, 2.0, 0.0,
            0.9, 2.0, 1.0,
            0.2, 7.0, 5.0,
            0.7, 7.0, 6.0,
        ]);
        let r = mr_scores(&x, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(r.scores[1], f64::INFINITY);
        assert_eq!(r.order[0], 1);
        assert_eq!(r.top(1).unwrap().indices, vec![1]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let x = DMatrix::from_row_slice(4, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 2.0, 3.0, 3.0, 3.0, 2.0, 2.0]);
        let r = mr_scores(&x, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(r.order, vec![0, 1, 2]);
        assert_eq!(r.top(2).unwrap().indices, vec![0, 1]);
    }

    #[test]
    fn top_all_and_too_many() {
        let x = random_matrix(10, 5, 1);
        let r = mr_scores(&x, &random_labels(10, 2, 1), 2).unwrap();
        let mut all = r.top(5).unwrap().indices;
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
        assert!(r.top(6).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let x = random_matrix(5, 2, 1);
        assert!(mr_scores(&x, &[0; 5], 1).is_err());
        assert!(mr_scores(&x, &[0; 5], 3).is_err());
    }
}
