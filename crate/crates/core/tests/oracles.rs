mod common;

use chemoclass::classify::logitboost::fit_binary;
use chemoclass::classify::pls::fit_plsda_detailed;
use chemoclass::classify::svm::dual_objective;
use chemoclass::classify::{fit_knn, fit_tree, kernel_bandwidth, solve_binary, TreeParams};
use chemoclass::harness::confusion_matrix;
use chemoclass::rng::rng_from;
use chemoclass::select::mr_scores;
use chemoclass::Classifier;
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_matches_sorted_distances(
        n in 2usize..60,
        d in 1usize..4,
        k in 1usize..12,
        integer in any::<bool>(),
        seed in any::<u64>(),
    ) {
        prop_assume!(k <= n);
        let mut x = random_matrix(n, d, seed);
        let mut q = random_matrix(25, d, seed ^ 1);
        if integer {
            // Coarse grids produce distance and vote ties.
            x.apply(|v| *v = v.round());
            q.apply(|v| *v = v.round());
        }
        let labels = random_labels(n, 3.min(n), 1, seed);
        let model = fit_knn(&x, &labels, 3, k).unwrap();
        let got = model.predict(&q).unwrap();
        for (i, &g) in got.iter().enumerate() {
            let row: Vec<f64> = q.row(i).iter().copied().collect();
            prop_assert_eq!(g, knn_oracle(&x, &labels, 3, k, &row));
        }
    }

    #[test]
    fn mr_matches_loops(n in 4usize..40, p in 1usize..20, k in 2usize..5, seed in any::<u64>()) {
        prop_assume!(n >= 2 * k);
        let x = random_matrix(n, p, seed);
        let labels = random_labels(n, k, 2, seed);
        let got = mr_scores(&x, &labels, k).unwrap().scores;
        for (g, o) in got.iter().zip(mr_oracle(&x, &labels, k)) {
            prop_assert!((g - o).abs() <= 1e-12 * o.abs());
        }
    }

    #[test]
    fn confusion_counts_pairs(pairs in prop::collection::vec((0usize..4, 0usize..4), 0..80)) {
        let (pred, reference): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let m = confusion_matrix(&pred, &reference, 4).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let count = pairs.iter().filter(|&&(p, q)| p == r && q == c).count();
                prop_assert_eq!(m.counts[r][c], count);
            }
        }
        prop_assert_eq!(m.total(), pairs.len());
    }
}

/// Root split chosen by scoring every feature and midpoint. Gini is compared
/// exactly as the rational `sum_child sum_c n_c^2 / n_child` (larger is
/// purer); the first candidate is taken even without a gain.
fn best_root_split(x: &DMatrix<f64>, labels: &[usize], k: usize) -> Option<(usize, f64)> {
    let n = x.nrows();
    let counts_of = |rows: &[usize]| {
        let mut c = vec![0u128; k];
        for &i in rows {
            c[labels[i]] += 1;
        }
        c.iter().map(|v| v * v).sum::<u128>()
    };
    let mut best = (0u128, 1u128);
    let mut choice = None;
    for j in 0..x.ncols() {
        let mut values: Vec<f64> = x.column(j).iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let left: Vec<usize> = (0..n).filter(|&i| x[(i, j)] <= t).collect();
            let right: Vec<usize> = (0..n).filter(|&i| x[(i, j)] > t).collect();
            let (nl, nr) = (left.len() as u128, right.len() as u128);
            let num = counts_of(&left) * nr + counts_of(&right) * nl;
            let den = nl * nr;
            if choice.is_none() || num * best.1 > best.0 * den {
                best = (num, den);
                choice = Some((j, t));
            }
        }
    }
    choice
}

#[test]
fn tree_root_matches_exhaustive_search() {
    let mut rng = rng_from(40);
    for _ in 0..300 {
        let x = DMatrix::from_fn(12, 3, |_, _| rng.random_range(0..6) as f64);
        let labels: Vec<usize> = (0..12).map(|_| rng.random_range(0..3)).collect();
        let tree = fit_tree(&x, &labels, 3, TreeParams { min_leaf: 1, max_depth: Some(1) }).unwrap();
        assert_eq!(tree.root_split(), best_root_split(&x, &labels, 3), "{x}{labels:?}");
    }
}

#[test]
fn pls_at_full_rank_is_least_squares() {
    for seed in 0..10 {
        let x = random_matrix(30, 5, seed);
        let labels = random_labels(30, 3, 3, seed);
        let (model, dec) = fit_plsda_detailed(&x, &labels, 3, 5).unwrap();
        let err = (model.coefficients() - ols_indicator(&x, &labels, 3)).amax();
        assert!(err <= 1e-6, "seed {seed}: {err}");
        let gram = dec.x_scores.transpose() * &dec.x_scores;
        for i in 0..5 {
            for j in 0..i {
                assert!(gram[(i, j)].abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn svm_dual_matches_active_set_oracle() {
    for seed in 0..12 {
        let n = 20;
        let (x, labels) = gaussian_classes(n / 2, 2, 2, 1.5, seed);
        let y: Vec<f64> = labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
        let kernel = kernel_bandwidth(&x).unwrap().matrix(&x, &x);
        let cost = [0.1, 1.0, 10.0][seed as usize % 3];
        let smo = solve_binary(&kernel, &y, cost, 1e-6, 1_000_000).unwrap();
        let oracle = svm_dual_oracle(&kernel, &y, cost);
        let diff = (smo.objective(&kernel, &y) - dual_objective(&oracle, &kernel, &y)).abs();
        assert!(diff <= 1e-4, "seed {seed}: objective gap {diff}");
    }
}

#[test]
fn boosting_beats_single_stump_on_box_class() {
    let mut rng = rng_from(9);
    let n = 400;
    let x = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-2.0f64..2.0));
    let y: Vec<bool> = (0..n).map(|i| x[(i, 0)].abs() < 1.0 && x[(i, 1)].abs() < 1.2).collect();
    let error = |rounds: usize| {
        let fit = fit_binary(&x, &y, rounds).unwrap();
        let wrong = (0..n)
            .filter(|&i| {
                let row = [x[(i, 0)], x[(i, 1)]];
                let f: f64 = fit
                    .stumps
                    .iter()
                    .map(|s| if row[s.feature] <= s.threshold { s.left } else { s.right })
                    .sum();
                (f > 0.0) != y[i]
            })
            .count();
        wrong as f64 / n as f64
    };
    let single = error(1);
    assert!(single >= 0.2, "single stump error {single}");
    let boosted = error(50);
    assert!(boosted < 0.1, "boosted error {boosted}");
}
