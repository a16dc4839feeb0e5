#![allow(dead_code)]

use chemoclass::dataset::WavelengthGrid;
use chemoclass::rng::rng_from;
use chemoclass::SpectraDataset;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from(seed);
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
}

/// Uniform labels with every class present at least `min_per_class` times.
pub fn random_labels(n: usize, k: usize, min_per_class: usize, seed: u64) -> Vec<usize> {
    assert!(n >= k * min_per_class);
    let mut rng = rng_from(seed);
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    for (i, l) in labels.iter_mut().take(k * min_per_class).enumerate() {
        *l = i % k;
    }
    labels
}

/// Labels `0, 0, ..., 1, 1, ...` with the given class sizes.
pub fn labels_from_counts(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect()
}

pub fn dataset(x: DMatrix<f64>, labels: Vec<usize>, k: usize) -> SpectraDataset {
    let p = x.ncols();
    let names = (0..k).map(|c| format!("c{c}")).collect();
    SpectraDataset::new(x, labels, names, WavelengthGrid::linspace(1100.0, 2498.0, p).unwrap()).unwrap()
}

/// Random dataset with the given class sizes.
pub fn noise_dataset(counts: &[usize], p: usize, seed: u64) -> SpectraDataset {
    let labels = labels_from_counts(counts);
    let x = random_matrix(labels.len(), p, seed);
    dataset(x, labels, counts.len())
}

/// Gaussian classes with unit covariance and means `separation` apart along
/// distinct axes.
pub fn gaussian_classes(per_class: usize, d: usize, k: usize, separation: f64, seed: u64) -> (DMatrix<f64>, Vec<usize>) {
    let mut x = random_matrix(per_class * k, d, seed);
    let mut labels = Vec::with_capacity(per_class * k);
    for c in 0..k {
        for s in 0..per_class {
            x[(c * per_class + s, c % d)] += separation;
            labels.push(c);
        }
    }
    (x, labels)
}

/// Random well-conditioned invertible matrix `I + 0.3 Z`.
pub fn invertible(d: usize, seed: u64) -> DMatrix<f64> {
    (0..)
        .map(|i| DMatrix::identity(d, d) + random_matrix(d, d, seed.wrapping_add(i)) * 0.3)
        .find(|a| a.singular_values().min() > 0.2)
        .expect("an invertible draw")
}

/// Applies `x -> x A + b` to every row.
pub fn affine(x: &DMatrix<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x * a;
    for mut row in out.row_iter_mut() {
        row += b.transpose();
    }
    out
}

/// Marginal relevance by explicit loops over samples.
pub fn mr_oracle(x: &DMatrix<f64>, labels: &[usize], k: usize) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let mut total = 0.0;
        for i in 0..n {
            total += x[(i, j)];
        }
        let overall = total / n as f64;
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            sums[labels[i]] += x[(i, j)];
            counts[labels[i]] += 1;
        }
        let mut bss = 0.0;
        let mut wss = 0.0;
        for i in 0..n {
            let mean = sums[labels[i]] / counts[labels[i]] as f64;
            bss += (mean - overall) * (mean - overall);
            wss += (x[(i, j)] - mean) * (x[(i, j)] - mean);
        }
        out.push(bss / wss);
    }
    out
}

/// kNN by sorting every training distance.
pub fn knn_oracle(train: &DMatrix<f64>, labels: &[usize], n_classes: usize, k: usize, query: &[f64]) -> usize {
    let mut dist: Vec<(f64, usize)> = Vec::new();
    for i in 0..train.nrows() {
        let mut d = 0.0;
        for j in 0..train.ncols() {
            d += (train[(i, j)] - query[j]).powi(2);
        }
        dist.push((d, i));
    }
    dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0; n_classes];
    for &(_, i) in &dist[..k] {
        votes[labels[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    for &(_, i) in &dist[..k] {
        if votes[labels[i]] == top {
            return labels[i];
        }
    }
    unreachable!()
}

/// Ordinary least-squares coefficients of the centred one-hot indicators on
/// the centred features.
pub fn ols_indicator(x: &DMatrix<f64>, labels: &[usize], k: usize) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let y = DMatrix::from_fn(n, k, |i, c| if labels[i] == c { 1.0 } else { 0.0 });
    let centre = |m: &DMatrix<f64>| {
        let means = m.row_mean();
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - means[j])
    };
    let xc = centre(x);
    let yc = centre(&y);
    let xtx = xc.transpose() * &xc;
    let xty = xc.transpose() * yc;
    let b = xtx.lu().solve(&xty).expect("full-rank design");
    assert_eq!(b.shape(), (d, k));
    b
}

/// Binary soft-margin SVM dual `min 0.5 a'Qa - 1'a` subject to `y'a = 0` and
/// `0 <= a <= cost`, solved by a primal active-set method.
pub fn svm_dual_oracle(kernel: &DMatrix<f64>, y: &[f64], cost: f64) -> Vec<f64> {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * kernel[(i, j)]);
    let pos = y.iter().position(|&v| v > 0.0).expect("a positive sample");
    let neg = y.iter().position(|&v| v < 0.0).expect("a negative sample");
    let mut a = vec![0.0; n];
    a[pos] = cost / 2.0;
    a[neg] = cost / 2.0;
    // 0 free, 1 at lower bound, 2 at upper bound.
    let mut state = vec![1u8; n];
    state[pos] = 0;
    state[neg] = 0;
    for _ in 0..100_000 {
        let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[(i, j)] * a[j]).sum::<f64>() - 1.0).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        let m = free.len();
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                kkt[(r, c)] = q[(i, j)];
            }
            kkt[(r, m)] = y[i];
            kkt[(m, r)] = y[i];
            rhs[r] = -grad[i];
        }
        let sol = kkt.lu().solve(&rhs).expect("nonsingular KKT system");
        let step: Vec<f64> = sol.iter().take(m).copied().collect();
        let nu = sol[m];
        if step.iter().all(|s| s.abs() < 1e-13) {
            // Multipliers of the bound constraints.
            let mut worst = None;
            let mut worst_v = 1e-12;
            for i in 0..n {
                let r = grad[i] + nu * y[i];
                let v = match state[i] {
                    1 => -r,
                    2 => r,
                    _ => 0.0,
                };
                if v > worst_v {
                    worst_v = v;
                    worst = Some(i);
                }
            }
            match worst {
                None => return a,
                Some(i) => state[i] = 0,
            }
            continue;
        }
        let mut t = 1.0;
        let mut blocking = None;
        for (r, &i) in free.iter().enumerate() {
            let s = step[r];
            let limit = if s < 0.0 {
                -a[i] / s
            } else if s > 0.0 {
                (cost - a[i]) / s
            } else {
                f64::INFINITY
            };
            if limit < t {
                t = limit;
                blocking = Some((i, s < 0.0));
            }
        }
        for (r, &i) in free.iter().enumerate() {
            a[i] += t * step[r];
        }
        if let Some((i, lower)) = blocking {
            a[i] = if lower { 0.0 } else { cost };
            state[i] = if lower { 1 } else { 2 };
        }
    }
    panic!("active-set oracle did not terminate");
}
