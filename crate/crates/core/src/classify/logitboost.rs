//! One-vs-rest LogitBoost with regression stumps.
//!
//! Each class gets a binary additive model `F` with `p = 1 / (1 + e^{-2F})`.
//! Every round fits a weighted least-squares stump to the Newton working
//! response `z = (y - p) / (p (1 - p))` with weights `p (1 - p)` and adds half
//! of it to `F`. The step is halved while it would increase the training
//! negative log-likelihood, so the likelihood never gets worse.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier};
use crate::dataset::class_counts;
use crate::error::{Error, Result};
use crate::linalg::argmax;

const Z_MAX: f64 = 4.0;
const MIN_WEIGHT_SUM: f64 = 1e-10;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogitBoostParams {
    pub n_iter: usize,
    /// Keep only this many features per class, ranked by the Wilcoxon
    /// rank-sum statistic of class versus rest.
    pub prescreen: Option<usize>,
}

impl LogitBoostParams {
    pub fn new(n_iter: usize) -> Self {
        Self { n_iter, prescreen: None }
    }
}

/// `f(x) = left` when `x[feature] <= threshold`, else `right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    fn eval(&self, row: &[f64]) -> f64 {
        if row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ClassScorer {
    Boosted { stumps: Vec<Stump> },
    /// Every training sample belongs to this class.
    Always,
    /// No training sample belongs to this class.
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitBoostModel {
    scorers: Vec<ClassScorer>,
    n_features: usize,
}

/// Output of one binary LogitBoost run.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryBoost {
    pub stumps: Vec<Stump>,
    /// Training negative log-likelihood before the first round and after each
    /// accepted round.
    pub nll_trace: Vec<f64>,
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// `sum_i log(1 + exp(-2 s_i F_i))` with `s_i = +1` for positives.
fn nll(f: &[f64], y: &[bool]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&fi, &yi)| softplus(if yi { -2.0 * fi } else { 2.0 * fi }))
        .sum()
}

/// Per-feature row orders, ascending by value.
fn presort(x: &DMatrix<f64>) -> Vec<Vec<usize>> {
    (0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            let mut idx: Vec<usize> = (0..x.nrows()).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

/// Weighted least-squares stump over `features`. Splits must strictly beat
/// the constant fit; earlier features and thresholds win ties.
fn fit_stump(x: &DMatrix<f64>, order: &[Vec<usize>], features: &[usize], z: &[f64], w: &[f64]) -> Stump {
    let total_w: f64 = w.iter().sum();
    let total_s: f64 = w.iter().zip(z).map(|(a, b)| a * b).sum();
    let constant = total_s / total_w;
    let mut best_gain = total_s * total_s / total_w;
    let mut best = Stump {
        feature: features.first().copied().unwrap_or(0),
        threshold: f64::INFINITY,
        left: constant,
        right: constant,
    };
    for &j in features {
        let col = x.column(j);
        let idx = &order[j];
        let (mut wl, mut sl) = (0.0, 0.0);
        for pos in 0..idx.len() - 1 {
            let r = idx[pos];
            wl += w[r];
            sl += w[r] * z[r];
            let (v, next) = (col[r], col[idx[pos + 1]]);
            if next <= v {
                continue;
            }
            let wr = total_w - wl;
            if wl <= 0.0 || wr <= 0.0 {
                continue;
            }
            let sr = total_s - sl;
            let gain = sl * sl / wl + sr * sr / wr;
            if gain > best_gain * (1.0 + 1e-12) {
                best_gain = gain;
                let mut threshold = v + (next - v) * 0.5;
                if threshold >= next {
                    threshold = v;
                }
                best = Stump { feature: j, threshold, left: sl / wl, right: sr / wr };
            }
        }
    }
    best
}

fn boost_binary(x: &DMatrix<f64>, order: &[Vec<usize>], features: &[usize], y: &[bool], n_iter: usize) -> BinaryBoost {
    let n = y.len();
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut f = vec![0.0; n];
    let mut current = nll(&f, y);
    let mut trace = vec![current];
    let mut stumps = Vec::new();
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut trial = vec![0.0; n];
    for _ in 0..n_iter {
        for i in 0..n {
            let p = 1.0 / (1.0 + (-2.0 * f[i]).exp());
            let target = if y[i] { 1.0 } else { 0.0 };
            w[i] = p * (1.0 - p);
            z[i] = if w[i] > 0.0 {
                ((target - p) / w[i]).clamp(-Z_MAX, Z_MAX)
            } else if y[i] {
                Z_MAX
            } else {
                -Z_MAX
            };
        }
        if w.iter().sum::<f64>() < MIN_WEIGHT_SUM {
            break;
        }
        let stump = fit_stump(x, order, features, &z, &w);
        let mut step = 0.5;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                trial[i] = f[i] + step * stump.eval(&rows[i]);
            }
            let value = nll(&trial, y);
            if value <= current {
                accepted = Some(value);
                break;
            }
            step *= 0.5;
        }
        let Some(value) = accepted else { break };
        if value >= current && stump.left == 0.0 && stump.right == 0.0 {
            break;
        }
        std::mem::swap(&mut f, &mut trial);
        current = value;
        trace.push(current);
        stumps.push(Stump {
            left: step * stump.left,
            right: step * stump.right,
            ..stump
        });
    }
    BinaryBoost { stumps, nll_trace: trace }
}

/// Binary LogitBoost on all features, exposing the likelihood trace.
pub fn fit_binary(x: &DMatrix<f64>, y: &[bool], n_iter: usize) -> Result<BinaryBoost> {
    if x.nrows() != y.len() || x.nrows() < 2 {
        return Err(Error::InvalidArgument("binary boosting needs matching rows and at least two samples".into()));
    }
    let features: Vec<usize> = (0..x.ncols()).collect();
    Ok(boost_binary(x, &presort(x), &features, y, n_iter))
}

/// Absolute standardised deviation of the Wilcoxon rank-sum of the positive
/// group from its null mean, per feature (mid-ranks for ties).
pub fn wilcoxon_scores(x: &DMatrix<f64>, y: &[bool]) -> Vec<f64> {
    let n = y.len();
    let n1 = y.iter().filter(|&&v| v).count() as f64;
    let n0 = n as f64 - n1;
    (0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut rank_sum = 0.0;
            let mut start = 0;
            while start < n {
                let mut end = start;
                while end + 1 < n && col[idx[end + 1]] == col[idx[start]] {
                    end += 1;
                }
                let mid = (start + end) as f64 / 2.0 + 1.0;
                rank_sum += idx[start..=end].iter().filter(|&&i| y[i]).count() as f64 * mid;
                start = end + 1;
            }
            let mean = n1 * (n as f64 + 1.0) / 2.0;
            let sd = (n1 * n0 * (n as f64 + 1.0) / 12.0).sqrt();
            if sd > 0.0 { ((rank_sum - mean) / sd).abs() } else { 0.0 }
        })
        .collect()
}

pub fn fit_logitboost(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, params: LogitBoostParams) -> Result<LogitBoostModel> {
    check_training(x, labels, n_classes)?;
    if params.n_iter == 0 {
        return Err(Error::InvalidArgument("n_iter must be at least 1".into()));
    }
    let d = x.ncols();
    let counts = class_counts(labels, n_classes);
    let order = presort(x);
    let scorers = (0..n_classes)
        .map(|c| {
            if counts[c] == 0 {
                return ClassScorer::Never;
            }
            if counts[c] == labels.len() {
                return ClassScorer::Always;
            }
            let y: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            let features: Vec<usize> = match params.prescreen {
                Some(keep) if keep < d => {
                    let scores = wilcoxon_scores(x, &y);
                    let mut ranked: Vec<usize> = (0..d).collect();
                    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
                    ranked.truncate(keep.max(1));
                    ranked.sort_unstable();
                    ranked
                }
                _ => (0..d).collect(),
            };
            ClassScorer::Boosted {
                stumps: boost_binary(x, &order, &features, &y, params.n_iter).stumps,
            }
        })
        .collect();
    Ok(LogitBoostModel { scorers, n_features: d })
}

impl LogitBoostModel {
    /// Additive class scores using at most `rounds` stumps per class.
    pub fn scores(&self, row: &[f64], rounds: usize) -> Vec<f64> {
        self.scorers
            .iter()
            .map(|s| match s {
                ClassScorer::Boosted { stumps } => stumps.iter().take(rounds).map(|st| st.eval(row)).sum(),
                ClassScorer::Always => f64::INFINITY,
                ClassScorer::Never => f64::NEG_INFINITY,
            })
            .collect()
    }

    /// Predictions of the model truncated to its first `rounds` rounds.
    pub fn predict_rounds(&self, rows: &DMatrix<f64>, rounds: usize) -> Result<Vec<usize>> {
        crate::error::ensure_features(self.n_features, rows.ncols())?;
        Ok(rows
            .row_iter()
            .map(|r| {
                let row: Vec<f64> = r.iter().copied().collect();
                argmax(self.scores(&row, rounds))
            })
            .collect())
    }

    pub fn scorers(&self) -> &[ClassScorer] {
        &self.scorers
    }
}

impl Classifier for LogitBoostModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.scorers.len()
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        argmax(self.scores(row, usize::MAX))
    }
}
