//! Small dense linear-algebra helpers shared by the models.

use nalgebra::{DMatrix, DVector};

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Subtracts `mean` from every row.
pub fn centre_rows(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        row -= mean.transpose();
    }
    out
}

/// Keeps only the columns listed in `features`, in that order.
pub fn select_columns(x: &DMatrix<f64>, features: &[usize]) -> DMatrix<f64> {
    x.select_columns(features)
}

/// Index of the largest value; the lowest index wins ties. NaN never wins.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Cholesky factor of a symmetric matrix, or `None` when it is not
/// numerically positive definite. Each pivot `L_ii^2` is compared with the
/// diagonal entry `M_ii`, which makes the test invariant to feature scaling.
pub fn checked_cholesky(m: &DMatrix<f64>, rel_tol: f64) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if m.diagonal().iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return None;
    }
    let chol = nalgebra::Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let ok = (0..m.nrows()).all(|i| l[(i, i)] * l[(i, i)] > rel_tol * m[(i, i)]);
    ok.then_some(chol)
}
