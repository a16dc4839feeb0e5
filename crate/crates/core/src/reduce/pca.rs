use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_features, Error, Result};
use crate::linalg::column_means;

/// How many principal components to retain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Components {
    /// Smallest count whose cumulative explained-variance fraction reaches
    /// the target, which must lie in `(0, 1]`.
    VarianceTarget(f64),
    Fixed(usize),
}

/// Covariance PCA computed from the thin SVD of the centred training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    mean: DVector<f64>,
    /// `p x m`, orthonormal columns.
    loadings: DMatrix<f64>,
    explained_variance: Vec<f64>,
    total_variance: f64,
}

pub fn pca_fit(train: &DMatrix<f64>, components: Components) -> Result<PcaModel> {
    let (n, p) = train.shape();
    if n < 2 {
        return Err(Error::InvalidArgument("PCA needs at least two rows".into()));
    }
    let mean = column_means(train);
    let mut centred = train.clone();
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let total_ss = centred.norm_squared();
    let scale = train.amax().max(1.0);
    if total_ss <= (f64::EPSILON * scale).powi(2) * (n * p) as f64 {
        return Err(Error::ZeroVariance);
    }
    let total_variance = total_ss / (n - 1) as f64;

    let svd = faer::Mat::<f64>::from_fn(n, p, |i, j| centred[(i, j)])
        .thin_svd()
        .map_err(|_| Error::SvdFailed)?;
    let (sigma, v) = (svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..sigma.nrows()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let variances: Vec<f64> = order.iter().map(|&i| sigma[i].powi(2) / (n - 1) as f64).collect();

    let m = match components {
        Components::Fixed(m) => {
            if m == 0 || m > variances.len() {
                return Err(Error::InvalidArgument(format!(
                    "cannot retain {m} components from a {n} x {p} matrix"
                )));
            }
            m
        }
        Components::VarianceTarget(target) => {
            if !(target > 0.0 && target <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "variance target must lie in (0, 1], got {target}"
                )));
            }
            let mut cumulative = 0.0;
            let mut m = variances.len();
            for (i, v) in variances.iter().enumerate() {
                cumulative += v / total_variance;
                if cumulative >= target - 1e-12 {
                    m = i + 1;
                    break;
                }
            }
            m
        }
    };

    let mut loadings = DMatrix::zeros(p, m);
    for (col, &src) in order.iter().take(m).enumerate() {
        let mut v = DVector::from_fn(p, |j, _| v[(j, src)]);
        // Sign convention: the largest-magnitude entry is positive.
        if v[v.iamax()] < 0.0 {
            v.neg_mut();
        }
        loadings.set_column(col, &v);
    }
    Ok(PcaModel {
        mean,
        loadings,
        explained_variance: variances[..m].to_vec(),
        total_variance,
    })
}

impl PcaModel {
    /// Scores `(rows - mean) * loadings`.
    pub fn transform(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure_features(self.mean.len(), rows.ncols())?;
        let mut centred = rows.clone();
        for mut row in centred.row_iter_mut() {
            row -= self.mean.transpose();
        }
        Ok(centred * &self.loadings)
    }

    /// Maps scores back to the original feature space.
    pub fn reconstruct(&self, scores: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure_features(self.n_components(), scores.ncols())?;
        let mut out = scores * self.loadings.transpose();
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        Ok(out)
    }

    pub fn n_components(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Sum of per-feature sample variances of the training data.
    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_matrix;

    #[test]
    fn line_y_equals_x() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let model = pca_fit(&x, Components::Fixed(2)).unwrap();
        let first = model.loadings().column(0);
        let h = 1.0 / 2f64.sqrt();
        assert!((first[0] - h).abs() < 1e-12 && (first[1] - h).abs() < 1e-12);
        assert!(model.explained_variance()[1].abs() < 1e-12);
    }

    #[test]
    fn total_variance_is_preserved() {
        let x = random_matrix(50, 20, 3);
        let model = pca_fit(&x, Components::Fixed(20)).unwrap();
        let mean = column_means(&x);
        let direct: f64 = (0..20)
            .map(|j| x.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / 49.0)
            .sum();
        let sum: f64 = model.explained_variance().iter().sum();
        assert!((sum - direct).abs() < 1e-8);
    }

    #[test]
    fn mean_transforms_to_zero() {
        let x = random_matrix(10, 6, 1);
        let model = pca_fit(&x, Components::Fixed(3)).unwrap();
        let mean_row = model.mean().transpose();
        let scores = model.transform(&DMatrix::from_row_slice(1, 6, mean_row.as_slice())).unwrap();
        assert!(scores.amax() < 1e-12);
    }

    #[test]
    fn variance_target_picks_smallest_count() {
        let x = random_matrix(30, 8, 9);
        let full = pca_fit(&x, Components::Fixed(8)).unwrap();
        let fractions: Vec<f64> = full
            .explained_variance()
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v / full.total_variance();
                Some(*acc)
            })
            .collect();
        let model = pca_fit(&x, Components::VarianceTarget(0.9)).unwrap();
        let m = model.n_components();
        assert!(fractions[m - 1] >= 0.9 - 1e-12);
        assert!(m == 1 || fractions[m - 2] < 0.9);
        assert_eq!(pca_fit(&x, Components::VarianceTarget(1.0)).unwrap().n_components(), 8);
    }

    #[test]
    fn errors() {
        let constant = DMatrix::from_element(5, 3, 2.5);
        assert!(matches!(pca_fit(&constant, Components::Fixed(1)), Err(Error::ZeroVariance)));
        let x = random_matrix(5, 3, 0);
        assert!(pca_fit(&x, Components::Fixed(4)).is_err());
        assert!(pca_fit(&x, Components::VarianceTarget(0.0)).is_err());
        assert!(pca_fit(&random_matrix(1, 3, 0), Components::Fixed(1)).is_err());
        let model = pca_fit(&x, Components::Fixed(2)).unwrap();
        assert!(matches!(
            model.transform(&random_matrix(2, 4, 0)),
            Err(Error::DimensionMismatch { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn wide_matrix() {
        let x = random_matrix(8, 40, 2);
        let model = pca_fit(&x, Components::Fixed(7)).unwrap();
        let gram = model.loadings().transpose() * model.loadings();
        assert!((gram - DMatrix::identity(7, 7)).amax() < 1e-10);
        let back = model.reconstruct(&model.transform(&x).unwrap()).unwrap();
        assert!((back - &x).amax() < 1e-10);
    }
}
