use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{confusion_matrix, BenchmarkReport, ConfusionMatrix, SplitRecord};
use super::spec::{ClassifierSpec, PipelineSpec, Preprocessor, Tuned};
use crate::classify::{
    fit_knn, fit_lda, fit_logitboost, fit_plsda, fit_qda, fit_rf, fit_svm, fit_tree, kernel_bandwidth, Classifier,
    ClassifierModel, ForestParams, LogitBoostParams, SvmParams,
};
use crate::dataset::{class_counts, repeated_splits, stratified_folds, SpectraDataset, TrainTestSplit, WavelengthGrid};
use crate::error::{Error, Result};
use crate::linalg::select_columns;
use crate::reduce::{fpca_fit, pca_fit, Components, FpcaConfig, FpcaModel, PcaModel};
use crate::rng::{mix_path, mix_seed};
use crate::select::{ga_select, mr_scores, FeatureSubset, GaConfig, GaOutcome};

const STREAM_GA: u64 = 0x6741;
const STREAM_CLASSIFIER: u64 = 1;
const STREAM_TUNE: u64 = 2;

/// A preprocessor fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedTransform {
    Identity,
    Pca(PcaModel),
    Fpca(FpcaModel),
    Subset(FeatureSubset),
}

impl FittedTransform {
    pub fn apply(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Self::Identity => Ok(rows.clone()),
            Self::Pca(m) => m.transform(rows),
            Self::Fpca(m) => m.scores(rows),
            Self::Subset(s) => {
                if let Some(&bad) = s.indices.iter().find(|&&j| j >= rows.ncols()) {
                    return Err(Error::DimensionMismatch { expected: bad + 1, found: rows.ncols() });
                }
                Ok(select_columns(rows, &s.indices))
            }
        }
    }
}

/// Seed of the genetic search run by a pipeline given its cell seed.
fn ga_seed(seed: u64, config: &GaConfig) -> u64 {
    mix_path(seed, &[STREAM_GA, config.seed])
}

/// Runs the genetic search of `config` on the given training rows.
pub fn fit_ga(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, config: &GaConfig, seed: u64) -> Result<GaOutcome> {
    let config = GaConfig { seed: ga_seed(seed, config), ..*config };
    ga_select(x, labels, n_classes, &config)
}

pub fn fit_transform(
    preprocessor: &Preprocessor,
    x: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    grid: &WavelengthGrid,
    seed: u64,
) -> Result<FittedTransform> {
    Ok(match preprocessor {
        Preprocessor::None => FittedTransform::Identity,
        Preprocessor::Pca { variance_target } => {
            FittedTransform::Pca(pca_fit(x, Components::VarianceTarget(*variance_target))?)
        }
        Preprocessor::Fpca { n_scores } => FittedTransform::Fpca(fpca_fit(x, grid, &FpcaConfig::with_scores(*n_scores))?),
        Preprocessor::Mr { count } => FittedTransform::Subset(mr_scores(x, labels, n_classes)?.top(*count)?),
        Preprocessor::Ga { config } => FittedTransform::Subset(fit_ga(x, labels, n_classes, config, seed)?.subset),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome<T> {
    pub best: T,
    /// Mean fold accuracy of every candidate, in grid order.
    pub scores: Vec<f64>,
}

fn training_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let present: Vec<bool> = class_counts(labels, n_classes).iter().map(|&c| c > 0).collect();
    let mut missing = 0;
    for attempt in 0..2 {
        let assignment = stratified_folds(labels, n_classes, folds, mix_seed(seed, attempt))?;
        let gap = (0..folds).find_map(|f| {
            let mut seen = vec![false; n_classes];
            for (i, &a) in assignment.iter().enumerate() {
                if a != f {
                    seen[labels[i]] = true;
                }
            }
            (0..n_classes).find(|&c| present[c] && !seen[c])
        });
        match gap {
            None => return Ok(assignment),
            Some(c) => missing = c,
        }
    }
    Err(Error::FoldMissingClass { class: missing })
}

/// Cross-validates a batch of candidates at once: `eval` fits on a fold's
/// training part and returns one prediction vector per candidate for the
/// held-out part. Returns the index of the best candidate and all scores.
fn tune_batched(
    x: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    n_candidates: usize,
    folds: usize,
    seed: u64,
    eval: impl Fn(&DMatrix<f64>, &[usize], &DMatrix<f64>) -> Result<Vec<Vec<usize>>>,
) -> Result<(usize, Vec<f64>)> {
    if n_candidates == 0 {
        return Err(Error::InvalidArgument("empty tuning grid".into()));
    }
    let assignment = training_folds(labels, n_classes, folds, seed)?;
    let mut scores = vec![0.0; n_candidates];
    for f in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == f).collect();
        let yt: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let predictions = eval(&x.select_rows(&train), &yt, &x.select_rows(&test))?;
        for (score, pred) in scores.iter_mut().zip(&predictions) {
            let hits = pred.iter().zip(&test).filter(|(p, &i)| **p == labels[i]).count();
            *score += hits as f64 / test.len() as f64;
        }
    }
    for s in scores.iter_mut() {
        *s /= folds as f64;
    }
    let best = (0..n_candidates).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    Ok((best, scores))
}

/// Picks the candidate with the highest mean stratified `folds`-fold
/// accuracy; ties go to the earliest candidate. A fold assignment that
/// leaves a class out of some training part is redrawn once before failing.
pub fn tune_by_cv<T: Copy>(
    x: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    candidates: &[T],
    folds: usize,
    seed: u64,
    fit_predict: impl Fn(&DMatrix<f64>, &[usize], &DMatrix<f64>, T) -> Result<Vec<usize>>,
) -> Result<TuneOutcome<T>> {
    let (best, scores) = tune_batched(x, labels, n_classes, candidates.len(), folds, seed, |xt, yt, xv| {
        candidates.iter().map(|&c| fit_predict(xt, yt, xv, c)).collect()
    })?;
    Ok(TuneOutcome { best: candidates[best], scores })
}

/// Smallest training part over the folds `tune_by_cv` would use.
fn min_fold_train(n: usize, folds: usize) -> usize {
    n - n.div_ceil(folds)
}

pub fn fit_classifier(
    spec: &ClassifierSpec,
    x: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<(ClassifierModel, Option<f64>)> {
    let tune_seed = mix_seed(seed, STREAM_TUNE);
    let model_seed = mix_seed(seed, STREAM_CLASSIFIER);
    Ok(match spec {
        ClassifierSpec::Lda => (ClassifierModel::Lda(fit_lda(x, labels, n_classes)?), None),
        ClassifierSpec::Qda => (ClassifierModel::Qda(fit_qda(x, labels, n_classes)?), None),
        ClassifierSpec::Tree { params } => (ClassifierModel::Tree(fit_tree(x, labels, n_classes, *params)?), None),
        ClassifierSpec::Rf { n_trees, mtry } => {
            let params = ForestParams { mtry: *mtry, ..ForestParams::with_trees(*n_trees, model_seed) };
            (ClassifierModel::Forest(fit_rf(x, labels, n_classes, &params)?), None)
        }
        ClassifierSpec::Plsda { n_components } => {
            (ClassifierModel::Pls(fit_plsda(x, labels, n_classes, *n_components)?), None)
        }
        ClassifierSpec::Knn { k } => {
            let k = match k {
                Tuned::Fixed(k) => *k,
                Tuned::Grid { candidates, folds } => {
                    let limit = min_fold_train(x.nrows(), *folds);
                    let feasible: Vec<usize> = candidates.iter().copied().filter(|&c| c <= limit).collect();
                    tune_by_cv(x, labels, n_classes, &feasible, *folds, tune_seed, |xt, yt, xv, c| {
                        fit_knn(xt, yt, n_classes, c)?.predict(xv)
                    })?
                    .best
                }
            };
            (ClassifierModel::Knn(fit_knn(x, labels, n_classes, k)?), Some(k as f64))
        }
        ClassifierSpec::LogitBoost { n_iter } => {
            let rounds = match n_iter {
                Tuned::Fixed(r) => *r,
                Tuned::Grid { candidates, folds } => {
                    let longest = *candidates.iter().max().unwrap_or(&1);
                    let (best, _) = tune_batched(x, labels, n_classes, candidates.len(), *folds, tune_seed, |xt, yt, xv| {
                        let model = fit_logitboost(xt, yt, n_classes, LogitBoostParams::new(longest))?;
                        candidates.iter().map(|&c| model.predict_rounds(xv, c)).collect()
                    })?;
                    candidates[best]
                }
            };
            let model = fit_logitboost(x, labels, n_classes, LogitBoostParams::new(rounds))?;
            (ClassifierModel::LogitBoost(model), Some(rounds as f64))
        }
        ClassifierSpec::Svm { cost } => {
            let kernel = kernel_bandwidth(x)?;
            let cost = match cost {
                Tuned::Fixed(c) => *c,
                Tuned::Grid { candidates, folds } => {
                    tune_by_cv(x, labels, n_classes, candidates, *folds, tune_seed, |xt, yt, xv, c| {
                        fit_svm(xt, yt, n_classes, &SvmParams::new(c, kernel))?.predict(xv)
                    })?
                    .best
                }
            };
            let model = fit_svm(x, labels, n_classes, &SvmParams::new(cost, kernel))?;
            (ClassifierModel::Svm(model), Some(cost))
        }
    })
}

/// Preprocessor and classifier fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineFit {
    pub transform: FittedTransform,
    pub model: ClassifierModel,
    pub tuned: Option<f64>,
}

impl PipelineFit {
    pub fn predict(&self, rows: &DMatrix<f64>) -> Result<Vec<usize>> {
        self.model.predict(&self.transform.apply(rows)?)
    }
}

/// Fits `spec` on the `train` rows of `data`. A precomputed GA subset, when
/// given, replaces the genetic search.
pub fn fit_pipeline(
    data: &SpectraDataset,
    spec: &PipelineSpec,
    train: &[usize],
    seed: u64,
    ga_subset: Option<&FeatureSubset>,
) -> Result<PipelineFit> {
    spec.validate()?;
    let x = data.rows(train);
    let y = data.labels_at(train);
    let k = data.n_classes();
    let transform = match (ga_subset, &spec.preprocessor) {
        (Some(subset), Preprocessor::Ga { .. }) => FittedTransform::Subset(subset.clone()),
        _ => fit_transform(&spec.preprocessor, &x, &y, k, data.grid(), seed)?,
    };
    let reduced = transform.apply(&x)?;
    let (model, tuned) = fit_classifier(&spec.classifier, &reduced, &y, k, seed)?;
    Ok(PipelineFit { transform, model, tuned })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<usize>,
    pub tuned: Option<f64>,
}

/// Fits on the split's training rows and scores its test rows.
pub fn run_pipeline(data: &SpectraDataset, spec: &PipelineSpec, split: &TrainTestSplit, seed: u64) -> Result<SplitOutcome> {
    run_cell(data, spec, split, seed, None)
}

fn run_cell(
    data: &SpectraDataset,
    spec: &PipelineSpec,
    split: &TrainTestSplit,
    seed: u64,
    ga_subset: Option<&FeatureSubset>,
) -> Result<SplitOutcome> {
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::InvalidArgument("split needs training and test rows".into()));
    }
    let fit = fit_pipeline(data, spec, &split.train, seed, ga_subset)?;
    let predictions = fit.predict(&data.rows(&split.test))?;
    let confusion = confusion_matrix(&predictions, &data.labels_at(&split.test), data.n_classes())?;
    Ok(SplitOutcome {
        accuracy: confusion.accuracy(),
        confusion,
        predictions,
        tuned: fit.tuned,
    })
}

/// Seed of cell `(spec, split)` in a benchmark.
pub fn cell_seed(seed: u64, spec_index: usize, split_index: usize) -> u64 {
    mix_path(seed, &[spec_index as u64, split_index as u64])
}

/// One genetic search performed by a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaRecord {
    pub config: GaConfig,
    pub outcome: Option<GaOutcome>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOutput {
    pub splits: Vec<TrainTestSplit>,
    pub reports: Vec<BenchmarkReport>,
    pub ga_runs: Vec<GaRecord>,
}

/// Runs every spec over `n_splits` shared stratified splits. Specs with a GA
/// preprocessor run on the first split only, and specs with the same GA
/// configuration share one genetic search. Failures are recorded per split.
pub fn run_benchmark(
    data: &SpectraDataset,
    specs: &[PipelineSpec],
    n_splits: usize,
    fraction: f64,
    seed: u64,
) -> Result<Vec<BenchmarkReport>> {
    Ok(run_benchmark_detailed(data, specs, n_splits, fraction, seed)?.reports)
}

/// Like [`run_benchmark`], also returning the splits and genetic searches.
pub fn run_benchmark_detailed(
    data: &SpectraDataset,
    specs: &[PipelineSpec],
    n_splits: usize,
    fraction: f64,
    seed: u64,
) -> Result<BenchmarkOutput> {
    for spec in specs {
        spec.validate()?;
    }
    let splits = repeated_splits(data, fraction, n_splits, seed)?;

    let mut ga_configs: Vec<GaConfig> = Vec::new();
    for spec in specs {
        if let Preprocessor::Ga { config } = &spec.preprocessor {
            if !ga_configs.contains(config) {
                ga_configs.push(*config);
            }
        }
    }
    let first = &splits[0];
    let x0 = data.rows(&first.train);
    let y0 = data.labels_at(&first.train);
    let ga_seed_base = mix_path(seed, &[STREAM_GA, 0]);
    let ga_runs: Vec<GaRecord> = ga_configs
        .iter()
        .map(|c| match fit_ga(&x0, &y0, data.n_classes(), c, ga_seed_base) {
            Ok(outcome) => GaRecord { config: *c, outcome: Some(outcome), error: None },
            Err(e) => GaRecord { config: *c, outcome: None, error: Some(e.to_string()) },
        })
        .collect();

    let cells: Vec<(usize, usize)> = specs
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            let count = if s.is_ga() { 1 } else { n_splits };
            (0..count).map(move |j| (i, j))
        })
        .collect();
    let outcomes: Vec<(usize, usize, Result<SplitOutcome>)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let spec = &specs[i];
            let outcome = match &spec.preprocessor {
                Preprocessor::Ga { config } => {
                    let pos = ga_configs.iter().position(|c| c == config).expect("GA configuration registered");
                    match &ga_runs[pos] {
                        GaRecord { outcome: Some(o), .. } => {
                            run_cell(data, spec, &splits[j], cell_seed(seed, i, j), Some(&o.subset))
                        }
                        GaRecord { error, .. } => Err(Error::InvalidArgument(format!(
                            "genetic search failed: {}",
                            error.as_deref().unwrap_or("unknown error")
                        ))),
                    }
                }
                _ => run_cell(data, spec, &splits[j], cell_seed(seed, i, j), None),
            };
            (i, j, outcome)
        })
        .collect();

    let mut per_spec: Vec<Vec<(usize, Result<SplitOutcome>)>> = specs.iter().map(|_| Vec::new()).collect();
    for (i, j, outcome) in outcomes {
        per_spec[i].push((j, outcome));
    }
    let reports = specs
        .iter()
        .zip(per_spec)
        .map(|(spec, mut results)| {
            results.sort_by_key(|(j, _)| *j);
            let last = results.last().and_then(|(_, r)| r.as_ref().ok()).map(|o| o.confusion.clone());
            let records = results
                .into_iter()
                .map(|(j, r)| match r {
                    Ok(o) => SplitRecord { split: j, accuracy: Some(o.accuracy), tuned: o.tuned, error: None },
                    Err(e) => SplitRecord { split: j, accuracy: None, tuned: None, error: Some(e.to_string()) },
                })
                .collect();
            BenchmarkReport::from_splits(spec.label.clone(), records, last)
        })
        .collect();
    Ok(BenchmarkOutput { splits, reports, ga_runs })
}
