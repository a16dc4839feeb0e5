//! Gaussian kernel and its empirical bandwidth.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Maximum number of pairwise distances used for the bandwidth estimate.
pub const MAX_PAIRS: usize = 5000;
const PAIR_SEED: u64 = 0x6b65_726e_656c;

/// Gaussian kernel `exp(-gamma * |x - x'|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub gamma: f64,
}

impl KernelSpec {
    pub fn gaussian(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel bandwidth must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (-self.gamma * d2).exp()
    }

    /// Kernel matrix between the rows of `a` and the rows of `b`.
    pub fn matrix(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let ra: Vec<Vec<f64>> = a.row_iter().map(|r| r.iter().copied().collect()).collect();
        let rb: Vec<Vec<f64>> = b.row_iter().map(|r| r.iter().copied().collect()).collect();
        DMatrix::from_fn(ra.len(), rb.len(), |i, j| self.eval(&ra[i], &rb[j]))
    }
}

fn sq_dist(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `gamma = 1 / median squared pairwise distance`, over all pairs when there
/// are at most [`MAX_PAIRS`] of them and otherwise over that many pairs drawn
/// with a fixed seed.
pub fn kernel_bandwidth(x: &DMatrix<f64>) -> Result<KernelSpec> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument("bandwidth needs at least two rows".into()));
    }
    let total = n * (n - 1) / 2;
    let mut d2: Vec<f64> = if total <= MAX_PAIRS {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| sq_dist(x, i, j))
            .collect()
    } else {
        let mut rng = rng_from(PAIR_SEED);
        (0..MAX_PAIRS)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                sq_dist(x, i, j)
            })
            .collect()
    };
    d2.sort_unstable_by(f64::total_cmp);
    let m = d2.len();
    let median = if m % 2 == 1 { d2[m / 2] } else { 0.5 * (d2[m / 2 - 1] + d2[m / 2]) };
    if !(median > 0.0) {
        return Err(Error::InvalidArgument("all points coincide; bandwidth undefined".into()));
    }
    KernelSpec::gaussian(1.0 / median)
}
