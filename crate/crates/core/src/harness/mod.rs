//! Pipelines of preprocessor and classifier, benchmarked over repeated
//! stratified splits and summarised as accuracy tables.

pub mod report;
pub mod run;
pub mod spec;

pub use report::{confusion_matrix, emit_table, mean_sd, BenchmarkReport, ConfusionMatrix, SplitRecord, Table};
pub use run::{
    cell_seed, fit_classifier, fit_ga, fit_pipeline, fit_transform, run_benchmark, run_benchmark_detailed, run_pipeline,
    tune_by_cv, BenchmarkOutput, FittedTransform, GaRecord, PipelineFit, SplitOutcome, TuneOutcome,
};
pub use spec::{parse_spec, preset, ClassifierSpec, PipelineSpec, Preprocessor, PresetOptions, Tuned, PRESETS};
