//! Helpers for unit tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::rng_from;

pub fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from(seed);
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
}

pub fn random_labels(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from(seed);
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    for (c, l) in labels.iter_mut().take(k).enumerate() {
        *l = c;
    }
    labels
}

/// Gaussian blobs around well separated centres, `per_class` rows each.
pub fn blobs(per_class: usize, d: usize, k: usize, spread: f64, seed: u64) -> (DMatrix<f64>, Vec<usize>) {
    let mut rng = rng_from(seed);
    let n = per_class * k;
    let mut x = DMatrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    for c in 0..k {
        for s in 0..per_class {
            let i = c * per_class + s;
            for j in 0..d {
                let centre = if j % k == c { 5.0 } else { 0.0 };
                let z: f64 = StandardNormal.sample(&mut rng);
                x[(i, j)] = centre + spread * z;
            }
            y.push(c);
        }
    }
    (x, y)
}
