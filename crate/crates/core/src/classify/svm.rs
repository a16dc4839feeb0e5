//! Soft-margin kernel SVM trained by sequential minimal optimisation, with
//! one-vs-one voting for more than two classes.
//!
//! The binary solver minimises `0.5 a^T Q a - sum(a)` subject to
//! `0 <= a_i <= C` and `y^T a = 0`, where `Q_ij = y_i y_j K_ij`, choosing
//! working pairs by maximal violation and second-order gain.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::{check_training, majority, Classifier};
use crate::dataset::class_counts;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub cost: f64,
    pub kernel: KernelSpec,
    /// Stopping threshold on the maximal KKT violation.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl SvmParams {
    pub fn new(cost: f64, kernel: KernelSpec) -> Self {
        Self {
            cost,
            kernel,
            tolerance: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

/// Solution of one binary dual problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

impl BinarySvm {
    /// Dual objective `0.5 a^T Q a - sum(a)` (minimised).
    pub fn objective(&self, kernel: &DMatrix<f64>, y: &[f64]) -> f64 {
        dual_objective(&self.alpha, kernel, y)
    }

    /// Decision values `sum_j a_j y_j K_ij + b` at the training points.
    pub fn decision_values(&self, kernel: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
        (0..y.len())
            .map(|i| {
                (0..y.len()).map(|j| self.alpha[j] * y[j] * kernel[(i, j)]).sum::<f64>() + self.bias
            })
            .collect()
    }

    /// Largest violation of the complementary-slackness conditions on the
    /// margins `y_i f(x_i)`.
    pub fn kkt_violation(&self, kernel: &DMatrix<f64>, y: &[f64], cost: f64) -> f64 {
        let f = self.decision_values(kernel, y);
        let eps = 1e-9 * cost.max(1.0);
        self.alpha
            .iter()
            .zip(f.iter().zip(y))
            .map(|(&a, (&fi, &yi))| {
                let margin = yi * fi;
                if a <= eps {
                    (1.0 - margin).max(0.0)
                } else if a >= cost - eps {
                    (margin - 1.0).max(0.0)
                } else {
                    (margin - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

pub fn dual_objective(alpha: &[f64], kernel: &DMatrix<f64>, y: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[(i, j)];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Solves the binary soft-margin dual for labels `y` in `{-1, +1}` given a
/// precomputed kernel matrix.
pub fn solve_binary(kernel: &DMatrix<f64>, y: &[f64], cost: f64, tolerance: f64, max_iter: usize) -> Result<BinarySvm> {
    let n = y.len();
    if kernel.shape() != (n, n) {
        return Err(Error::InvalidArgument("kernel matrix does not match labels".into()));
    }
    if !(cost > 0.0) || !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("cost {cost} and tolerance {tolerance} must be positive")));
    }
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[(i, j)];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64, yi: f64| if yi > 0.0 { a < cost } else { a > 0.0 };
    let lower = |a: f64, yi: f64| if yi > 0.0 { a > 0.0 } else { a < cost };

    let mut iterations = 0;
    loop {
        // Maximal violating index in the "up" set.
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if upper(alpha[t], y[t]) && -y[t] * grad[t] > g_max {
                g_max = -y[t] * grad[t];
                i_sel = t;
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            if !lower(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            if i_sel == usize::MAX {
                continue;
            }
            let b = g_max - v;
            if b > 0.0 {
                let mut a = kernel[(i_sel, i_sel)] + kernel[(t, t)] - 2.0 * kernel[(i_sel, t)];
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best_gain {
                    best_gain = gain;
                    j_sel = t;
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || g_max - g_min < tolerance {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations: max_iter });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = kernel[(i, i)] + kernel[(j, j)] - 2.0 * kernel[(i, j)];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > cost {
                    alpha[i] = cost;
                    alpha[j] = cost - diff;
                }
            } else if alpha[j] > cost {
                alpha[j] = cost;
                alpha[i] = cost + diff;
            }
        } else {
            let mut quad = kernel[(i, i)] + kernel[(j, j)] - 2.0 * kernel[(i, j)];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > cost {
                if alpha[i] > cost {
                    alpha[i] = cost;
                    alpha[j] = sum - cost;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cost {
                if alpha[j] > cost {
                    alpha[j] = cost;
                    alpha[i] = sum - cost;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < cost {
            free_sum += yg;
            free_count += 1;
        } else if (alpha[t] >= cost && y[t] > 0.0) || (alpha[t] <= 0.0 && y[t] < 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    Ok(BinarySvm {
        alpha,
        bias: -rho,
        iterations,
    })
}

/// One fitted pairwise machine: class `pos` against class `neg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMachine {
    pub pos: usize,
    pub neg: usize,
    /// Training-row indices of the support vectors.
    pub support: Vec<usize>,
    /// `alpha_i * y_i` for each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    train: DMatrix<f64>,
    kernel: KernelSpec,
    machines: Vec<PairMachine>,
    n_classes: usize,
    /// Prediction when fewer than two classes were present in training.
    fallback: usize,
}

pub fn fit_svm(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, params: &SvmParams) -> Result<SvmModel> {
    check_training(x, labels, n_classes)?;
    let counts = class_counts(labels, n_classes);
    let full = params.kernel.matrix(x, x);
    let mut machines = Vec::new();
    for pos in 0..n_classes {
        for neg in pos + 1..n_classes {
            if counts[pos] == 0 || counts[neg] == 0 {
                continue;
            }
            let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == pos || labels[i] == neg).collect();
            let y: Vec<f64> = rows.iter().map(|&i| if labels[i] == pos { 1.0 } else { -1.0 }).collect();
            let sub = DMatrix::from_fn(rows.len(), rows.len(), |a, b| full[(rows[a], rows[b])]);
            let sol = solve_binary(&sub, &y, params.cost, params.tolerance, params.max_iter)?;
            let (support, coef) = rows
                .iter()
                .zip(sol.alpha.iter().zip(&y))
                .filter(|(_, (&a, _))| a > 0.0)
                .map(|(&r, (&a, &yy))| (r, a * yy))
                .unzip();
            machines.push(PairMachine { pos, neg, support, coef, bias: sol.bias });
        }
    }
    Ok(SvmModel {
        train: x.clone(),
        kernel: params.kernel,
        machines,
        n_classes,
        fallback: majority(&counts),
    })
}

impl SvmModel {
    pub fn machines(&self) -> &[PairMachine] {
        &self.machines
    }
}

impl Classifier for SvmModel {
    fn n_features(&self) -> usize {
        self.train.ncols()
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        if self.machines.is_empty() {
            return self.fallback;
        }
        let mut cache: Vec<Option<f64>> = vec![None; self.train.nrows()];
        let mut buf = vec![0.0; row.len()];
        let mut votes = vec![0usize; self.n_classes];
        for m in &self.machines {
            let mut f = m.bias;
            for (&s, &c) in m.support.iter().zip(&m.coef) {
                let k = *cache[s].get_or_insert_with(|| {
                    for (b, v) in buf.iter_mut().zip(self.train.row(s).iter()) {
                        *b = *v;
                    }
                    self.kernel.eval(&buf, row)
                });
                f += c * k;
            }
            votes[if f >= 0.0 { m.pos } else { m.neg }] += 1;
        }
        majority(&votes)
    }
}
