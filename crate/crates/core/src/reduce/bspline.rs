//! Clamped B-spline bases on an interval.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// B-spline basis of a given order (degree + 1) with a clamped knot vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineBasis {
    order: usize,
    knots: Vec<f64>,
}

impl BSplineBasis {
    /// Clamped basis on `[lo, hi]` with `interior` equally spaced interior
    /// knots. The basis has `interior + order` functions.
    pub fn uniform(lo: f64, hi: f64, interior: usize, order: usize) -> Result<Self> {
        if !(lo < hi) || order == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid B-spline domain [{lo}, {hi}] or order {order}"
            )));
        }
        let mut knots = vec![lo; order];
        let step = (hi - lo) / (interior + 1) as f64;
        knots.extend((1..=interior).map(|i| lo + step * i as f64));
        knots.extend(std::iter::repeat_n(hi, order));
        Ok(Self { order, knots })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn dim(&self) -> usize {
        self.knots.len() - self.order
    }

    fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Values of the `nderiv`-th derivative of every basis function at `t`.
    pub fn eval(&self, t: f64, nderiv: usize) -> Vec<f64> {
        self.eval_order(self.order, t, nderiv)
    }

    fn eval_order(&self, order: usize, t: f64, nderiv: usize) -> Vec<f64> {
        let tau = &self.knots;
        let count = tau.len() - order;
        if nderiv >= order {
            return vec![0.0; count];
        }
        if nderiv > 0 {
            let lower = self.eval_order(order - 1, t, nderiv - 1);
            let k = (order - 1) as f64;
            return (0..count)
                .map(|i| {
                    let left = ratio(lower[i], tau[i + order - 1] - tau[i]);
                    let right = ratio(lower[i + 1], tau[i + order] - tau[i + 1]);
                    k * (left - right)
                })
                .collect();
        }

        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        // Order-1 indicators over half-open spans; the right end of the
        // domain belongs to the last non-empty span.
        let mut values: Vec<f64> = (0..tau.len() - 1)
            .map(|i| {
                let inside = if t == hi {
                    tau[i] < tau[i + 1] && tau[i + 1] == hi
                } else {
                    tau[i] <= t && t < tau[i + 1]
                };
                if inside { 1.0 } else { 0.0 }
            })
            .collect();
        for m in 2..=order {
            values = (0..tau.len() - m)
                .map(|i| {
                    let a = ratio((t - tau[i]) * values[i], tau[i + m - 1] - tau[i]);
                    let b = ratio((tau[i + m] - t) * values[i + 1], tau[i + m] - tau[i + 1]);
                    a + b
                })
                .collect();
        }
        values
    }

    /// `len(points) x dim` matrix of derivative values.
    pub fn design(&self, points: &[f64], nderiv: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(points.len(), self.dim());
        for (r, &t) in points.iter().enumerate() {
            for (c, v) in self.eval(t, nderiv).into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        out
    }

    /// Roughness penalty `R[i][j] = integral of B_i'' B_j''` over the domain,
    /// by three-point Gauss-Legendre quadrature on every knot span.
    pub fn roughness_penalty(&self) -> DMatrix<f64> {
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let dim = self.dim();
        let mut penalty = DMatrix::zeros(dim, dim);
        for span in self.knots.windows(2) {
            let (a, b) = (span[0], span[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in NODES.iter().zip(WEIGHTS) {
                let d2 = self.eval(mid + half * x, 2);
                for i in 0..dim {
                    if d2[i] == 0.0 {
                        continue;
                    }
                    for j in 0..dim {
                        penalty[(i, j)] += w * half * d2[i] * d2[j];
                    }
                }
            }
        }
        penalty
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 { 0.0 } else { num / den }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        let basis = BSplineBasis::uniform(400.0, 2500.0, 7, 4).unwrap();
        assert_eq!(basis.dim(), 11);
        for i in 0..=50 {
            let t = 400.0 + 42.0 * i as f64;
            let sum: f64 = basis.eval(t, 0).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "t = {t}: {sum}");
            let d: f64 = basis.eval(t, 1).iter().sum();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let basis = BSplineBasis::uniform(0.0, 1.0, 5, 4).unwrap();
        let h = 1e-6;
        for &t in &[0.13, 0.41, 0.77] {
            let up = basis.eval(t + h, 1);
            let down = basis.eval(t - h, 1);
            let second = basis.eval(t, 2);
            for i in 0..basis.dim() {
                let fd = (up[i] - down[i]) / (2.0 * h);
                assert!((fd - second[i]).abs() < 1e-4, "basis {i}");
            }
            let v_up = basis.eval(t + h, 0);
            let v_down = basis.eval(t - h, 0);
            let first = basis.eval(t, 1);
            for i in 0..basis.dim() {
                assert!(((v_up[i] - v_down[i]) / (2.0 * h) - first[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn penalty_annihilates_linear_functions() {
        let basis = BSplineBasis::uniform(0.0, 2.0, 6, 4).unwrap();
        let r = basis.roughness_penalty();
        // Greville abscissae reproduce the identity function exactly.
        let knots = basis.knots();
        let greville: Vec<f64> = (0..basis.dim())
            .map(|i| (knots[i + 1] + knots[i + 2] + knots[i + 3]) / 3.0)
            .collect();
        let c = nalgebra::DVector::from_vec(greville);
        assert!((&r * &c).amax() < 1e-9);
        let ones = nalgebra::DVector::from_element(basis.dim(), 1.0);
        assert!((&r * &ones).amax() < 1e-9);
        // t^2 has integral of (t^2)''^2 = 4 * 2 = 8 over [0, 2].
        let x = nalgebra::DMatrix::from_fn(40, 1, |i, _| 2.0 * i as f64 / 39.0);
        let pts: Vec<f64> = x.iter().copied().collect();
        let b = basis.design(&pts, 0);
        let y = nalgebra::DVector::from_iterator(40, pts.iter().map(|t| t * t));
        let coef = (b.transpose() * &b).lu().solve(&(b.transpose() * y)).unwrap();
        let energy = (coef.transpose() * &r * &coef)[(0, 0)];
        assert!((energy - 8.0).abs() < 1e-6, "{energy}");
    }
}
