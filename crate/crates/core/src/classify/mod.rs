//! Classifiers sharing one fit/predict contract.
//!
//! Every `fit` consumes training rows only and returns an immutable model;
//! `predict` is a pure function of the model and its input. Wherever a
//! choice between classes or candidates is tied, the lowest index wins.

pub mod discriminant;
pub mod forest;
pub mod kernel;
pub mod knn;
pub mod logitboost;
pub mod pls;
pub mod svm;
pub mod tree;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_features, Error, Result};

pub use discriminant::{fit_lda, fit_qda, LdaModel, QdaModel};
pub use forest::{fit_rf, ForestParams, RandomForest};
pub use kernel::{kernel_bandwidth, KernelSpec};
pub use knn::{fit_knn, KnnModel};
pub use logitboost::{fit_logitboost, LogitBoostModel, LogitBoostParams};
pub use pls::{fit_plsda, nipals, PlsDecomposition, PlsModel};
pub use svm::{fit_svm, solve_binary, BinarySvm, SvmModel, SvmParams};
pub use tree::{fit_tree, DecisionTree, TreeParams};

/// Uniform prediction contract.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;

    /// Label of one row of length `n_features()`.
    fn predict_row(&self, row: &[f64]) -> usize;

    fn predict(&self, rows: &DMatrix<f64>) -> Result<Vec<usize>> {
        ensure_features(self.n_features(), rows.ncols())?;
        let mut buf = vec![0.0; rows.ncols()];
        Ok((0..rows.nrows())
            .map(|i| {
                for (b, v) in buf.iter_mut().zip(rows.row(i).iter()) {
                    *b = *v;
                }
                self.predict_row(&buf)
            })
            .collect())
    }
}

/// A fitted model of any supported family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    Lda(LdaModel),
    Qda(QdaModel),
    Knn(KnnModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    LogitBoost(LogitBoostModel),
    Pls(PlsModel),
    Svm(SvmModel),
}

impl ClassifierModel {
    fn inner(&self) -> &dyn Classifier {
        match self {
            Self::Lda(m) => m,
            Self::Qda(m) => m,
            Self::Knn(m) => m,
            Self::Tree(m) => m,
            Self::Forest(m) => m,
            Self::LogitBoost(m) => m,
            Self::Pls(m) => m,
            Self::Svm(m) => m,
        }
    }
}

impl Classifier for ClassifierModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        self.inner().predict_row(row)
    }
}

/// Checks the shared preconditions of every fit.
pub(crate) fn check_training(x: &DMatrix<f64>, labels: &[usize], n_classes: usize) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidArgument("empty training matrix".into()));
    }
    if labels.len() != x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    Ok(())
}

/// Most frequent class; ties to the lowest index.
pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}
