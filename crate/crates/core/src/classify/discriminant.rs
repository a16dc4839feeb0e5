//! Gaussian discriminant analysis: linear (pooled covariance) and
//! quadratic (per-class covariance).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier};
use crate::dataset::class_counts;
use crate::error::{Error, Result};
use crate::linalg::{argmax, checked_cholesky};

/// Relative pivot threshold below which a covariance matrix is treated as
/// singular.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    /// `k x d` class means.
    means: DMatrix<f64>,
    /// Inverse Cholesky factor of the pooled covariance.
    whitening: DMatrix<f64>,
    log_priors: Vec<f64>,
    /// Classes with no training samples are never predicted.
    present: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdaModel {
    means: DMatrix<f64>,
    whitening: Vec<DMatrix<f64>>,
    /// `log prior - 0.5 log det(covariance)` per class.
    offsets: Vec<f64>,
    present: Vec<bool>,
    n_features: usize,
}

fn class_means(x: &DMatrix<f64>, labels: &[usize], counts: &[usize]) -> DMatrix<f64> {
    let mut means = DMatrix::zeros(counts.len(), x.ncols());
    for (i, &l) in labels.iter().enumerate() {
        let mut row = means.row_mut(l);
        row += x.row(i);
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            let mut row = means.row_mut(c);
            row /= n as f64;
        }
    }
    means
}

fn whitening_of(cov: &DMatrix<f64>, context: impl FnOnce() -> String) -> Result<(DMatrix<f64>, f64)> {
    let chol = checked_cholesky(cov, SINGULAR_TOL).ok_or_else(|| Error::SingularCovariance { context: context() })?;
    let l = chol.l();
    let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let inv = l
        .solve_lower_triangular(&DMatrix::identity(cov.nrows(), cov.nrows()))
        .ok_or_else(|| Error::SingularCovariance { context: "triangular inverse".into() })?;
    Ok((inv, log_det))
}

fn mahalanobis(whitening: &DMatrix<f64>, row: &[f64], mean: nalgebra::MatrixView1xX<f64, nalgebra::U1, nalgebra::Dyn>) -> f64 {
    let diff = DVector::from_iterator(row.len(), row.iter().zip(mean.iter()).map(|(a, b)| a - b));
    (whitening * diff).norm_squared()
}

pub fn fit_lda(x: &DMatrix<f64>, labels: &[usize], n_classes: usize) -> Result<LdaModel> {
    check_training(x, labels, n_classes)?;
    let (n, d) = x.shape();
    let counts = class_counts(labels, n_classes);
    let k_present = counts.iter().filter(|&&c| c > 0).count();
    if n <= k_present {
        return Err(Error::SingularCovariance {
            context: format!("{n} samples leave no degrees of freedom for {k_present} classes"),
        });
    }
    let means = class_means(x, labels, &counts);
    let mut cov = DMatrix::zeros(d, d);
    for (i, &l) in labels.iter().enumerate() {
        let diff = (x.row(i) - means.row(l)).transpose();
        cov += &diff * diff.transpose();
    }
    cov /= (n - k_present) as f64;
    let (whitening, _) = whitening_of(&cov, || format!("pooled covariance of {d} features from {n} samples"))?;
    Ok(LdaModel {
        means,
        whitening,
        log_priors: counts.iter().map(|&c| if c > 0 { (c as f64 / n as f64).ln() } else { 0.0 }).collect(),
        present: counts.iter().map(|&c| c > 0).collect(),
    })
}

pub fn fit_qda(x: &DMatrix<f64>, labels: &[usize], n_classes: usize) -> Result<QdaModel> {
    check_training(x, labels, n_classes)?;
    let (n, d) = x.shape();
    let counts = class_counts(labels, n_classes);
    let means = class_means(x, labels, &counts);
    let mut whitening = Vec::with_capacity(n_classes);
    let mut offsets = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let n_c = counts[c];
        if n_c == 0 {
            whitening.push(DMatrix::zeros(0, 0));
            offsets.push(0.0);
            continue;
        }
        // A covariance estimated from n_c samples has rank at most n_c - 1.
        if n_c <= d {
            return Err(Error::SingularCovariance {
                context: format!("class {c} has {n_c} samples for {d} features"),
            });
        }
        let mut cov = DMatrix::zeros(d, d);
        for (i, _) in labels.iter().enumerate().filter(|(_, &l)| l == c) {
            let diff = (x.row(i) - means.row(c)).transpose();
            cov += &diff * diff.transpose();
        }
        cov /= (n_c - 1) as f64;
        let (w, log_det) = whitening_of(&cov, || format!("class {c} covariance"))?;
        whitening.push(w);
        offsets.push((n_c as f64 / n as f64).ln() - 0.5 * log_det);
    }
    Ok(QdaModel {
        means,
        whitening,
        offsets,
        present: counts.iter().map(|&c| c > 0).collect(),
        n_features: d,
    })
}

impl LdaModel {
    /// Discriminant `log prior - 0.5 * Mahalanobis^2` per class.
    pub fn discriminants(&self, row: &[f64]) -> Vec<f64> {
        (0..self.means.nrows())
            .map(|c| {
                if self.present[c] {
                    self.log_priors[c] - 0.5 * mahalanobis(&self.whitening, row, self.means.row(c))
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }
}

impl Classifier for LdaModel {
    fn n_features(&self) -> usize {
        self.means.ncols()
    }

    fn n_classes(&self) -> usize {
        self.means.nrows()
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        argmax(self.discriminants(row))
    }
}

impl QdaModel {
    pub fn discriminants(&self, row: &[f64]) -> Vec<f64> {
        (0..self.means.nrows())
            .map(|c| {
                if self.present[c] {
                    self.offsets[c] - 0.5 * mahalanobis(&self.whitening[c], row, self.means.row(c))
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }
}

impl Classifier for QdaModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.means.nrows()
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        argmax(self.discriminants(row))
    }
}
