//! CART classification trees with Gini impurity.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training, majority, Classifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Minimum samples in each child of a split.
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { min_leaf: 5, max_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        /// Rows with `value <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    n_classes: usize,
}

pub fn fit_tree(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, params: TreeParams) -> Result<DecisionTree> {
    check_training(x, labels, n_classes)?;
    if params.min_leaf == 0 {
        return Err(Error::InvalidArgument("min_leaf must be at least 1".into()));
    }
    if x.nrows() >= 1 << 16 || n_classes >= 1 << 16 {
        return Err(Error::InvalidArgument("trees support fewer than 65536 rows and classes".into()));
    }
    let mut samples: Vec<usize> = (0..x.nrows()).collect();
    let weights = vec![1; x.nrows()];
    Ok(grow(&RankedFeatures::new(x), labels, &weights, n_classes, params, &mut samples, None))
}

/// Each feature column replaced by the ranks of its values among the
/// distinct sorted values, so split searches sort integers.
pub(crate) struct RankedFeatures {
    n_rows: usize,
    ranks: Vec<u32>,
    values: Vec<Vec<f64>>,
}

impl RankedFeatures {
    pub(crate) fn new(x: &DMatrix<f64>) -> Self {
        let n_rows = x.nrows();
        let mut ranks = vec![0u32; x.len()];
        let mut values = Vec::with_capacity(x.ncols());
        let mut order: Vec<usize> = Vec::with_capacity(n_rows);
        for (j, col) in x.column_iter().enumerate() {
            order.clear();
            order.extend(0..n_rows);
            order.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut distinct: Vec<f64> = Vec::new();
            for &i in &order {
                if distinct.last() != Some(&col[i]) {
                    distinct.push(col[i]);
                }
                ranks[j * n_rows + i] = (distinct.len() - 1) as u32;
            }
            values.push(distinct);
        }
        Self { n_rows, ranks, values }
    }

    fn rank(&self, row: usize, feature: usize) -> u32 {
        self.ranks[feature * self.n_rows + row]
    }
}

/// Grows a tree on distinct `samples`, row `i` counting `weights[i]` times.
/// With `mtry`, each split searches a fresh uniform subset of that many
/// features.
pub(crate) fn grow(
    data: &RankedFeatures,
    labels: &[usize],
    weights: &[usize],
    n_classes: usize,
    params: TreeParams,
    samples: &mut [usize],
    mtry: Option<(usize, &mut ChaCha8Rng)>,
) -> DecisionTree {
    let n_features = data.values.len();
    let mut builder = Builder {
        data,
        n_features,
        labels,
        weights,
        n_classes,
        params,
        mtry,
        nodes: Vec::new(),
        keys: Vec::with_capacity(samples.len()),
        features: Vec::new(),
        left: vec![0; n_classes],
    };
    builder.build(samples, 0);
    DecisionTree {
        nodes: builder.nodes,
        n_features,
        n_classes,
    }
}

struct Builder<'a, 'r> {
    data: &'a RankedFeatures,
    n_features: usize,
    labels: &'a [usize],
    weights: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    mtry: Option<(usize, &'r mut ChaCha8Rng)>,
    nodes: Vec<Node>,
    /// `rank << 32 | weight << 16 | label` of the node's samples for one
    /// feature.
    keys: Vec<u64>,
    features: Vec<usize>,
    left: Vec<usize>,
}

struct Best {
    score: f64,
    feature: usize,
    /// Samples with rank at most this go left.
    rank: u32,
    threshold: f64,
}

impl Builder<'_, '_> {
    fn build(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &s in samples.iter() {
            counts[self.labels[s]] += self.weights[s];
        }
        let n: usize = counts.iter().sum();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        let split = if pure || depth_reached || n < 2 * self.params.min_leaf {
            None
        } else {
            self.best_split(samples, &counts)
        };
        let Some(best) = split else {
            let class = majority(&counts);
            self.nodes.push(Node::Leaf { class, counts });
            return self.nodes.len() - 1;
        };

        let mut mid = 0;
        for i in 0..samples.len() {
            if self.data.rank(samples[i], best.feature) <= best.rank {
                samples.swap(i, mid);
                mid += 1;
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { class: 0, counts: Vec::new() });
        let (left_part, right_part) = samples.split_at_mut(mid);
        let left = self.build(left_part, depth + 1);
        let right = self.build(right_part, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) {
        self.features.clear();
        match &mut self.mtry {
            Some((m, rng)) if *m < self.n_features => {
                self.features.extend(sample(*rng, self.n_features, *m));
                self.features.sort_unstable();
            }
            _ => self.features.extend(0..self.n_features),
        }
    }

    /// Maximises `sum_c l_c^2 / n_l + sum_c r_c^2 / n_r`, which minimises the
    /// size-weighted Gini impurity of the children. Earlier candidates
    /// (lower feature, then lower threshold) win ties.
    fn best_split(&mut self, samples: &[usize], counts: &[usize]) -> Option<Best> {
        self.candidate_features();
        let n: usize = counts.iter().sum();
        let m = samples.len();
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Best> = None;
        let features = std::mem::take(&mut self.features);
        let mut keys = std::mem::take(&mut self.keys);
        let mut left = std::mem::take(&mut self.left);
        for &f in &features {
            keys.clear();
            keys.extend(
                samples
                    .iter()
                    .map(|&s| {
                        (u64::from(self.data.rank(s, f)) << 32) | (self.weights[s] as u64) << 16 | self.labels[s] as u64
                    }),
            );
            keys.sort_unstable();
            if keys[0] >> 32 == keys[m - 1] >> 32 {
                continue;
            }
            left.iter_mut().for_each(|c| *c = 0);
            // Running sums of squared class counts on each side.
            let mut left_sq = 0usize;
            let mut right_sq: usize = counts.iter().map(|c| c * c).sum();
            let mut n_left = 0;
            for i in 0..m - 1 {
                let r = (keys[i] >> 32) as u32;
                let l = (keys[i] & 0xffff) as usize;
                let w = ((keys[i] >> 16) & 0xffff) as usize;
                let right_c = counts[l] - left[l];
                right_sq -= (2 * right_c - w) * w;
                left_sq += (2 * left[l] + w) * w;
                left[l] += w;
                n_left += w;
                let next = (keys[i + 1] >> 32) as u32;
                if next == r || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let score = left_sq as f64 / n_left as f64 + right_sq as f64 / (n - n_left) as f64;
                if best.as_ref().is_none_or(|b| score > b.score * (1.0 + 1e-12)) {
                    let (v, w) = (self.data.values[f][r as usize], self.data.values[f][next as usize]);
                    let mut threshold = v + (w - v) * 0.5;
                    if threshold >= w {
                        threshold = v;
                    }
                    best = Some(Best { score, feature: f, rank: r, threshold });
                }
            }
        }
        self.features = features;
        self.keys = keys;
        self.left = left;
        best
    }
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn depth_of(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + depth_of(nodes, *left).max(depth_of(nodes, *right)),
            }
        }
        depth_of(&self.nodes, 0)
    }

    /// The split chosen at the root, if any.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

impl Classifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { class, .. } => return *class,
                Node::Split { feature, threshold, left, right } => {
                    id = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_labels, random_matrix};

    fn full() -> TreeParams {
        TreeParams { min_leaf: 1, max_depth: None }
    }

    #[test]
    fn threshold_separable_is_depth_one() {
        let x = DMatrix::from_column_slice(6, 1, &[0.1, 0.4, 0.3, 2.0, 2.5, 1.9]);
        let y = [0, 0, 0, 1, 1, 1];
        let tree = fit_tree(&x, &y, 2, full()).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.root_split(), Some((0, (0.4 + 1.9) / 2.0)));
        assert_eq!(tree.predict(&x).unwrap(), y);
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = DMatrix::from_row_slice(8, 2, &[
            0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0,
            0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0,
        ]);
        let y = [0, 0, 1, 1, 0, 0, 1, 1];
        let shallow = fit_tree(&x, &y, 2, TreeParams { min_leaf: 1, max_depth: Some(1) }).unwrap();
        let acc1 = shallow.predict(&x).unwrap().iter().zip(&y).filter(|(a, b)| a == b).count();
        assert!(acc1 <= 4);
        let deep = fit_tree(&x, &y, 2, TreeParams { min_leaf: 1, max_depth: Some(2) }).unwrap();
        assert_eq!(deep.predict(&x).unwrap(), y);
    }

    #[test]
    fn fully_grown_tree_interpolates_distinct_rows() {
        let x = random_matrix(40, 3, 5);
        let y = random_labels(40, 3, 6);
        let tree = fit_tree(&x, &y, 3, full()).unwrap();
        assert_eq!(tree.predict(&x).unwrap(), y);
    }

    #[test]
    fn min_leaf_respected() {
        let x = random_matrix(30, 2, 1);
        let y = random_labels(30, 2, 2);
        let tree = fit_tree(&x, &y, 2, TreeParams { min_leaf: 5, max_depth: None }).unwrap();
        for node in tree.nodes() {
            if let Node::Leaf { counts, .. } = node {
                assert!(counts.iter().sum::<usize>() >= 5);
            }
        }
    }

    #[test]
    fn pure_node_is_leaf() {
        let x = random_matrix(5, 2, 1);
        let tree = fit_tree(&x, &[1; 5], 3, full()).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.predict(&x).unwrap(), vec![1; 5]);
    }
}
