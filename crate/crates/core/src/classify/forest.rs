//! Random forests of CART trees.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, DecisionTree, RankedFeatures, TreeParams};
use super::{check_training, majority, Classifier};
use crate::error::{Error, Result};
use crate::rng::{mix_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            min_leaf: 1,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_trees(n_trees: usize, seed: u64) -> Self {
        Self { n_trees, seed, ..Self::default() }
    }
}

/// `ceil(sqrt(d))`, at least 1.
pub fn default_mtry(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_features: usize,
    n_classes: usize,
}

/// Tree `t` draws its bootstrap sample and split candidates from the stream
/// `mix_seed(seed, t)`.
pub fn fit_rf(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, params: &ForestParams) -> Result<RandomForest> {
    check_training(x, labels, n_classes)?;
    let (n, d) = x.shape();
    let mtry = params.mtry.unwrap_or_else(|| default_mtry(d));
    if params.n_trees == 0 || mtry == 0 || mtry > d || params.min_leaf == 0 {
        return Err(Error::InvalidArgument(format!(
            "invalid forest: {} trees, mtry {mtry} of {d} features, min_leaf {}",
            params.n_trees, params.min_leaf
        )));
    }
    if n >= 1 << 16 || n_classes >= 1 << 16 {
        return Err(Error::InvalidArgument("forests support fewer than 65536 rows and classes".into()));
    }
    let tree_params = TreeParams {
        min_leaf: params.min_leaf,
        max_depth: params.max_depth,
    };
    let ranked = RankedFeatures::new(x);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(mix_seed(params.seed, t as u64));
            let mut weights = vec![0usize; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1;
                }
            } else {
                weights.fill(1);
            }
            let mut samples: Vec<usize> = (0..n).filter(|&i| weights[i] > 0).collect();
            grow(&ranked, labels, &weights, n_classes, tree_params, &mut samples, Some((mtry, &mut rng)))
        })
        .collect();
    Ok(RandomForest {
        trees,
        n_features: d,
        n_classes,
    })
}

impl RandomForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Per-class vote counts for one row.
    pub fn votes(&self, row: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_row(row)] += 1;
        }
        votes
    }
}

impl Classifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        majority(&self.votes(row))
    }
}
