pub mod classify;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod reduce;
pub mod rng;
pub mod select;

#[cfg(test)]
pub(crate) mod testutil;

pub use classify::{Classifier, ClassifierModel};
pub use dataset::{SpectraDataset, TrainTestSplit, WavelengthGrid};
pub use error::{Error, Result};
pub use harness::{BenchmarkReport, ConfusionMatrix, PipelineSpec};
pub use select::FeatureSubset;
