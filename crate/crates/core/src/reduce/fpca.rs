//! Functional PCA of spectra treated as smooth curves over wavelength.
//!
//! Each training spectrum is smoothed onto a cubic B-spline basis by
//! roughness-penalised least squares, with one smoothing parameter shared by
//! all curves and chosen by generalised cross-validation. The covariance
//! operator of the smoothed curves is then diagonalised under the quadrature
//! inner product `<f, g> = sum_j q_j f(w_j) g(w_j)` with trapezoidal weights
//! `q` on the wavelength grid.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::bspline::BSplineBasis;
use crate::dataset::WavelengthGrid;
use crate::error::{ensure_features, Error, Result};
use crate::linalg::{centre_rows, column_means};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaConfig {
    pub n_scores: usize,
    /// Requested number of interior knots. Reduced when needed so that the
    /// basis dimension stays at most `p` and below the training size.
    pub interior_knots: usize,
    /// Log10 offsets (relative to the trace ratio of the Gram and penalty
    /// matrices) scanned by generalised cross-validation.
    pub log10_lambda_grid: Vec<f64>,
}

impl Default for FpcaConfig {
    fn default() -> Self {
        Self {
            n_scores: 4,
            interior_knots: 40,
            log10_lambda_grid: (0..=56).map(|i| -10.0 + 0.25 * i as f64).collect(),
        }
    }
}

impl FpcaConfig {
    pub fn with_scores(n_scores: usize) -> Self {
        Self { n_scores, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaModel {
    basis: BSplineBasis,
    grid: Vec<f64>,
    quadrature: Vec<f64>,
    lambda: f64,
    /// Basis coefficients of the mean curve.
    mean_curve: DVector<f64>,
    /// `dim x n_scores` basis coefficients of the eigenfunctions.
    eigenfunctions: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    /// `p x dim` map from a sampled curve to its smoothed coefficients
    /// (transposed).
    smoother_t: DMatrix<f64>,
    /// Quadrature Gram matrix of the basis.
    gram: DMatrix<f64>,
}

/// Trapezoidal quadrature weights on a (possibly non-uniform) grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let p = grid.len();
    if p == 1 {
        return vec![1.0];
    }
    (0..p)
        .map(|j| {
            let left = if j > 0 { grid[j] - grid[j - 1] } else { 0.0 };
            let right = if j + 1 < p { grid[j + 1] - grid[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

pub fn fpca_fit(train: &DMatrix<f64>, grid: &WavelengthGrid, config: &FpcaConfig) -> Result<FpcaModel> {
    let (n, p) = train.shape();
    ensure_features(grid.len(), p)?;
    if n < 2 {
        return Err(Error::InvalidArgument("FPCA needs at least two curves".into()));
    }
    const ORDER: usize = 4;
    // dim = interior + ORDER must satisfy dim <= p and dim < n.
    let cap = p.min(n - 1);
    if cap < ORDER {
        return Err(Error::InvalidArgument(format!(
            "FPCA needs p >= {ORDER} and n > {ORDER}, got p = {p}, n = {n}"
        )));
    }
    let interior = config.interior_knots.min(cap - ORDER);
    let w = grid.values();
    let basis = BSplineBasis::uniform(w[0], w[p - 1], interior, ORDER)?;
    let dim = basis.dim();
    if config.n_scores == 0 || config.n_scores > dim {
        return Err(Error::InvalidArgument(format!(
            "n_scores must lie in 1..={dim}, got {}",
            config.n_scores
        )));
    }

    let design = basis.design(w, 0);
    let quadrature = trapezoid_weights(w);
    let btb = design.transpose() * &design;
    let penalty = basis.roughness_penalty();

    // Generalised cross-validation over a shared smoothing parameter.
    let yb = train * &design; // n x dim
    let design_t = design.transpose();
    let scale = btb.trace() / penalty.trace().max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, f64)> = None;
    for &offset in &config.log10_lambda_grid {
        let lambda = scale * 10f64.powf(offset);
        let Some(chol) = (&btb + &penalty * lambda).cholesky() else {
            continue;
        };
        // Coefficients C = Y B A^{-1}; fitted curves C B^T.
        let coef = chol.solve(&yb.transpose()).transpose();
        let rss = (train - &coef * &design_t).norm_squared();
        let dof = chol.solve(&btb).trace();
        let denom = 1.0 - dof / p as f64;
        if denom <= 0.0 {
            continue;
        }
        let gcv = rss / (n * p) as f64 / (denom * denom);
        if best.is_none_or(|(_, g)| gcv < g) {
            best = Some((lambda, gcv));
        }
    }
    let lambda = best.map(|(l, _)| l).ok_or(Error::SingularBasis)?;
    let chol = (&btb + &penalty * lambda)
        .cholesky()
        .ok_or(Error::SingularBasis)?;
    let smoother_t = chol.solve(&design.transpose()).transpose(); // p x dim

    let mut gram = DMatrix::zeros(dim, dim);
    for (j, q) in quadrature.iter().enumerate() {
        let row = design.row(j);
        gram += row.transpose() * row * *q;
    }
    let gram = (&gram + gram.transpose()) * 0.5;
    let gram_eig = SymmetricEigen::new(gram.clone());
    let max_ev = gram_eig.eigenvalues.max();
    if gram_eig.eigenvalues.min() <= 1e-12 * max_ev.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularBasis);
    }
    let sqrt_d = gram_eig.eigenvalues.map(f64::sqrt);
    let v = &gram_eig.eigenvectors;
    let gram_half = v * DMatrix::from_diagonal(&sqrt_d) * v.transpose();
    let gram_inv_half = v * DMatrix::from_diagonal(&sqrt_d.map(|s| 1.0 / s)) * v.transpose();

    let coefs = train * &smoother_t; // n x dim
    let mean_curve = column_means(&coefs);
    let centred = centre_rows(&coefs, &mean_curve);
    let cov = centred.transpose() * &centred / (n - 1) as f64;
    let operator = &gram_half * cov * &gram_half;
    let operator = (&operator + operator.transpose()) * 0.5;
    let eig = SymmetricEigen::new(operator);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let m = config.n_scores;
    let mut eigenfunctions = DMatrix::zeros(dim, m);
    let mut eigenvalues = Vec::with_capacity(m);
    for (col, &src) in order.iter().take(m).enumerate() {
        let mut b = &gram_inv_half * eig.eigenvectors.column(src);
        if b[b.iamax()] < 0.0 {
            b.neg_mut();
        }
        eigenfunctions.set_column(col, &b);
        eigenvalues.push(eig.eigenvalues[src].max(0.0));
    }

    Ok(FpcaModel {
        basis,
        grid: w.to_vec(),
        quadrature,
        lambda,
        mean_curve,
        eigenfunctions,
        eigenvalues,
        smoother_t,
        gram,
    })
}

impl FpcaModel {
    /// Smoothed basis coefficients of each row.
    pub fn smooth(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure_features(self.grid.len(), rows.ncols())?;
        Ok(rows * &self.smoother_t)
    }

    /// Quadrature inner products of the smoothed, mean-removed curves with
    /// the eigenfunctions.
    pub fn scores(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let coefs = centre_rows(&self.smooth(rows)?, &self.mean_curve);
        Ok(coefs * &self.gram * &self.eigenfunctions)
    }

    /// Squared quadrature-norm error of reconstructing each row's smoothed
    /// curve from its first `n_scores` scores.
    pub fn reconstruction_error(&self, rows: &DMatrix<f64>, n_scores: usize) -> Result<Vec<f64>> {
        let n_scores = n_scores.min(self.n_scores());
        let coefs = centre_rows(&self.smooth(rows)?, &self.mean_curve);
        let phi = self.eigenfunctions.columns(0, n_scores);
        let scores = &coefs * &self.gram * phi;
        let residual = coefs - scores * phi.transpose();
        Ok(residual
            .row_iter()
            .map(|r| (r * &self.gram).dot(&r))
            .collect())
    }

    /// Eigenfunctions evaluated on the wavelength grid, `p x n_scores`.
    pub fn eigenfunctions_on_grid(&self) -> DMatrix<f64> {
        self.basis.design(&self.grid, 0) * &self.eigenfunctions
    }

    pub fn n_scores(&self) -> usize {
        self.eigenfunctions.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.grid.len()
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn mean_curve(&self) -> &DVector<f64> {
        &self.mean_curve
    }

    pub fn quadrature(&self) -> &[f64] {
        &self.quadrature
    }
}
