//! k-nearest-neighbour classification by Euclidean distance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    train: DMatrix<f64>,
    labels: Vec<usize>,
    k: usize,
    n_classes: usize,
}

pub fn fit_knn(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, k: usize) -> Result<KnnModel> {
    check_training(x, labels, n_classes)?;
    if k == 0 || k > x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={}, got {k}",
            x.nrows()
        )));
    }
    Ok(KnnModel {
        train: x.clone(),
        labels: labels.to_vec(),
        k,
        n_classes,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Training indices of the `k` nearest rows, closest first; equal
    /// distances keep the lower training index first.
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .train
            .row_iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        let k = self.k;
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dist.truncate(k);
        }
        dist.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist.into_iter().map(|(_, i)| i).collect()
    }
}

impl Classifier for KnnModel {
    fn n_features(&self) -> usize {
        self.train.ncols()
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Majority vote; a tied vote goes to the class of the nearest neighbour
    /// among the tied classes.
    fn predict_row(&self, row: &[f64]) -> usize {
        let neighbours = self.neighbours(row);
        let mut votes = vec![0usize; self.n_classes];
        for &i in &neighbours {
            votes[self.labels[i]] += 1;
        }
        let top = *votes.iter().max().expect("at least one class");
        neighbours
            .iter()
            .map(|&i| self.labels[i])
            .find(|&c| votes[c] == top)
            .expect("a voted class")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_labels, random_matrix};

    #[test]
    fn one_nn_recovers_training_labels() {
        let x = random_matrix(25, 3, 1);
        let y = random_labels(25, 3, 2);
        let model = fit_knn(&x, &y, 3, 1).unwrap();
        assert_eq!(model.predict(&x).unwrap(), y);
    }

    #[test]
    fn k_equals_n_gives_global_majority() {
        let x = random_matrix(9, 2, 3);
        let y = vec![0, 1, 1, 2, 1, 0, 1, 2, 2];
        let model = fit_knn(&x, &y, 3, 9).unwrap();
        assert!(model.predict(&random_matrix(10, 2, 4)).unwrap().iter().all(|&c| c == 1));
    }

    #[test]
    fn vote_tie_goes_to_nearest() {
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 3.0, 10.0]);
        let y = [0, 1, 1, 0];
        let model = fit_knn(&x, &y, 2, 2).unwrap();
        assert_eq!(model.predict_row(&[0.9]), 1);
        assert_eq!(model.predict_row(&[0.1]), 0);
    }

    #[test]
    fn distance_tie_prefers_lower_index() {
        let x = DMatrix::from_column_slice(2, 1, &[-1.0, 1.0]);
        let model = fit_knn(&x, &[1, 0], 2, 1).unwrap();
        assert_eq!(model.predict_row(&[0.0]), 1);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let x = random_matrix(5, 2, 1);
        let model = fit_knn(&x, &[0, 1, 0, 1, 0], 2, 3).unwrap();
        assert!(model.predict(&DMatrix::zeros(0, 2)).unwrap().is_empty());
        assert!(model.predict(&DMatrix::zeros(1, 3)).is_err());
        assert!(fit_knn(&x, &[0, 1, 0, 1, 0], 2, 6).is_err());
    }
}
