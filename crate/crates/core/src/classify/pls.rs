//! PLS discriminant analysis: NIPALS PLS2 on the one-hot class indicator
//! matrix, decoded by argmax over the fitted indicators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier};
use crate::error::{Error, Result};
use crate::linalg::{argmax, centre_rows, column_means};

const MAX_INNER: usize = 1000;
const INNER_TOL: f64 = 1e-13;

/// Latent structure extracted by NIPALS from centred `X` (n x d) and
/// centred `Y` (n x k).
#[derive(Debug, Clone, PartialEq)]
pub struct PlsDecomposition {
    /// `d x a` weights.
    pub weights: DMatrix<f64>,
    /// `d x a` X loadings.
    pub x_loadings: DMatrix<f64>,
    /// `k x a` Y loadings.
    pub y_loadings: DMatrix<f64>,
    /// `n x a` X scores.
    pub x_scores: DMatrix<f64>,
}

impl PlsDecomposition {
    pub fn n_components(&self) -> usize {
        self.weights.ncols()
    }

    /// Regression coefficients `W (P^T W)^{-1} Q^T`, `d x k`.
    pub fn coefficients(&self) -> Result<DMatrix<f64>> {
        let ptw = self.x_loadings.transpose() * &self.weights;
        let inv = ptw.try_inverse().ok_or(Error::ZeroVariance)?;
        Ok(&self.weights * inv * self.y_loadings.transpose())
    }
}

/// Extracts up to `n_components` PLS2 components. Extraction stops early
/// once the deflated `X` or its covariance with `Y` vanishes.
pub fn nipals(x: &DMatrix<f64>, y: &DMatrix<f64>, n_components: usize) -> Result<PlsDecomposition> {
    let (n, d) = x.shape();
    let k = y.ncols();
    let mut xr = x.clone();
    let mut yr = y.clone();
    let scale = x.norm().max(f64::MIN_POSITIVE);
    let mut w_cols = Vec::new();
    let mut p_cols = Vec::new();
    let mut q_cols = Vec::new();
    let mut t_cols = Vec::new();
    for _ in 0..n_components {
        if xr.norm() <= 1e-12 * scale {
            break;
        }
        let start = (0..k)
            .max_by(|&a, &b| yr.column(a).norm_squared().total_cmp(&yr.column(b).norm_squared()).then(b.cmp(&a)))
            .expect("at least one response");
        let mut u: DVector<f64> = yr.column(start).into_owned();
        if u.norm() == 0.0 {
            break;
        }
        let mut t = DVector::zeros(n);
        let mut w = DVector::zeros(d);
        let mut q = DVector::zeros(k);
        for iter in 0..MAX_INNER {
            w = xr.transpose() * &u;
            let norm = w.norm();
            if norm == 0.0 {
                break;
            }
            w /= norm;
            let t_new = &xr * &w;
            let tt = t_new.norm_squared();
            q = yr.transpose() * &t_new / tt;
            let qq = q.norm_squared();
            let converged = iter > 0 && (&t_new - &t).norm() <= INNER_TOL * t_new.norm();
            t = t_new;
            if qq == 0.0 || k == 1 || converged {
                break;
            }
            u = &yr * &q / qq;
        }
        let tt = t.norm_squared();
        if w.norm() == 0.0 || tt == 0.0 {
            break;
        }
        let p = xr.transpose() * &t / tt;
        xr -= &t * p.transpose();
        yr -= &t * q.transpose();
        w_cols.push(w);
        p_cols.push(p);
        q_cols.push(q);
        t_cols.push(t);
    }
    if w_cols.is_empty() {
        return Err(Error::ZeroVariance);
    }
    Ok(PlsDecomposition {
        weights: DMatrix::from_columns(&w_cols),
        x_loadings: DMatrix::from_columns(&p_cols),
        y_loadings: DMatrix::from_columns(&q_cols),
        x_scores: DMatrix::from_columns(&t_cols),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsModel {
    x_mean: DVector<f64>,
    y_mean: DVector<f64>,
    /// `d x k`.
    coefficients: DMatrix<f64>,
    n_components: usize,
}

pub fn one_hot(labels: &[usize], n_classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), n_classes, |i, c| if labels[i] == c { 1.0 } else { 0.0 })
}

pub fn fit_plsda(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, n_components: usize) -> Result<PlsModel> {
    Ok(fit_plsda_detailed(x, labels, n_classes, n_components)?.0)
}

/// Like [`fit_plsda`], also returning the latent decomposition.
pub fn fit_plsda_detailed(
    x: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    n_components: usize,
) -> Result<(PlsModel, PlsDecomposition)> {
    check_training(x, labels, n_classes)?;
    let (n, d) = x.shape();
    if n_components == 0 || n_components > d || n_components + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "n_components must lie in 1..={}, got {n_components}",
            d.min(n.saturating_sub(1))
        )));
    }
    let x_mean = column_means(x);
    let xc = centre_rows(x, &x_mean);
    let y = one_hot(labels, n_classes);
    let y_mean = column_means(&y);
    let yc = centre_rows(&y, &y_mean);
    let decomposition = nipals(&xc, &yc, n_components)?;
    let coefficients = decomposition.coefficients()?;
    let model = PlsModel {
        x_mean,
        y_mean,
        coefficients,
        n_components: decomposition.n_components(),
    };
    Ok((model, decomposition))
}

impl PlsModel {
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Fitted indicator responses for one row.
    pub fn responses(&self, row: &[f64]) -> DVector<f64> {
        let xc = DVector::from_iterator(row.len(), row.iter().zip(self.x_mean.iter()).map(|(a, m)| a - m));
        self.coefficients.transpose() * xc + &self.y_mean
    }
}

impl Classifier for PlsModel {
    fn n_features(&self) -> usize {
        self.x_mean.len()
    }

    fn n_classes(&self) -> usize {
        self.y_mean.len()
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        argmax(self.responses(row).iter().copied())
    }
}
