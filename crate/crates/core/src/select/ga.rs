//! Genetic-algorithm wrapper selection over feature bitmasks.
//!
//! Fitness of a mask is the mean stratified cross-validated accuracy of a
//! random forest restricted to the masked features. Populations evolve by
//! tournament selection, uniform crossover, per-bit mutation and single
//! elitism. The result is the `top_k` features included most often across
//! every individual of every generation.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureSubset, Provenance};
use crate::classify::forest::default_mtry;
use crate::classify::{check_training, fit_rf, Classifier, ForestParams};
use crate::dataset::{class_counts, stratified_folds};
use crate::error::{Error, Result};
use crate::linalg::select_columns;
use crate::rng::{mix_path, rng_from};

const STREAM_INIT: u64 = 0;
const STREAM_BREED: u64 = 1;
const STREAM_FITNESS: u64 = 2;
const STREAM_FOLDS: u64 = 3;
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub cv_folds: usize,
    pub top_k: usize,
    pub seed: u64,
    /// Trees in each fitness forest.
    pub forest_trees: usize,
    /// Inclusion probability of each bit in a fresh individual.
    pub init_density: f64,
    pub tournament_size: usize,
}

impl GaConfig {
    /// Population 50, 100 generations, crossover 0.8, mutation 0.1,
    /// 10-fold fitness, top 5 features.
    pub fn new(seed: u64) -> Self {
        Self {
            population_size: 50,
            generations: 100,
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            cv_folds: 10,
            top_k: 5,
            seed,
            forest_trees: 100,
            init_density: 0.05,
            tournament_size: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        if self.population_size < 2
            || self.generations < 1
            || self.cv_folds < 2
            || self.top_k < 1
            || self.forest_trees < 1
            || self.tournament_size < 1
            || !prob(self.crossover_prob)
            || !prob(self.mutation_prob)
            || !(self.init_density > 0.0 && self.init_density <= 1.0)
        {
            return Err(Error::InvalidArgument(format!("invalid GA configuration {self:?}")));
        }
        Ok(())
    }
}

impl Default for GaConfig {
    fn default() -> Self {
        Self::new(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub mean_active: f64,
    /// Fitness evaluations not served from the cache.
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome {
    pub subset: FeatureSubset,
    /// Fraction of all individuals that included each feature.
    pub frequencies: Vec<f64>,
    pub trace: Vec<GenerationStats>,
    pub best_mask: Vec<usize>,
    pub best_fitness: f64,
}

impl GaOutcome {
    /// Per-generation trace as CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("generation,best,mean,mean_active,evaluations\n");
        for s in &self.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.generation, s.best, s.mean, s.mean_active, s.evaluations
            );
        }
        out
    }
}

type Mask = Vec<bool>;

fn random_mask(p: usize, density: f64, rng: &mut ChaCha8Rng) -> Mask {
    for _ in 0..MAX_REDRAWS {
        let mask: Mask = (0..p).map(|_| rng.random_bool(density)).collect();
        if mask.iter().any(|&b| b) {
            return mask;
        }
    }
    let mut mask = vec![false; p];
    mask[rng.random_range(0..p)] = true;
    mask
}

fn active(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect()
}

struct Fitness<'a> {
    x: &'a DMatrix<f64>,
    labels: &'a [usize],
    n_classes: usize,
    folds: Vec<Vec<usize>>,
    trains: Vec<Vec<usize>>,
    trees: usize,
}

impl Fitness<'_> {
    fn evaluate(&self, mask: &[bool], seed: u64) -> Result<f64> {
        let features = active(mask);
        let sub = select_columns(self.x, &features);
        let mut total = 0.0;
        for (f, (test, train)) in self.folds.iter().zip(&self.trains).enumerate() {
            let params = ForestParams {
                mtry: Some(default_mtry(features.len())),
                ..ForestParams::with_trees(self.trees, mix_path(seed, &[f as u64]))
            };
            let xt = sub.select_rows(train);
            let yt: Vec<usize> = train.iter().map(|&i| self.labels[i]).collect();
            let forest = fit_rf(&xt, &yt, self.n_classes, &params)?;
            let pred = forest.predict(&sub.select_rows(test))?;
            let hits = pred.iter().zip(test).filter(|(p, &i)| **p == self.labels[i]).count();
            total += hits as f64 / test.len() as f64;
        }
        Ok(total / self.folds.len() as f64)
    }
}

fn tournament(fitness: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Runs the genetic search on training rows `x` with `labels`.
pub fn ga_select(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, config: &GaConfig) -> Result<GaOutcome> {
    config.validate()?;
    check_training(x, labels, n_classes)?;
    let (n, p) = x.shape();
    if config.top_k > p {
        return Err(Error::InvalidArgument(format!("top_k {} exceeds {p} features", config.top_k)));
    }
    let counts = class_counts(labels, n_classes);
    if let Some(c) = counts.iter().position(|&c| c == 1) {
        return Err(Error::FoldMissingClass { class: c });
    }

    let assignment = stratified_folds(labels, n_classes, config.cv_folds, mix_path(config.seed, &[STREAM_FOLDS]))?;
    let folds: Vec<Vec<usize>> = (0..config.cv_folds)
        .map(|f| (0..n).filter(|&i| assignment[i] == f).collect())
        .collect();
    let trains = (0..config.cv_folds)
        .map(|f| (0..n).filter(|&i| assignment[i] != f).collect())
        .collect();
    let fitness_fn = Fitness {
        x,
        labels,
        n_classes,
        folds,
        trains,
        trees: config.forest_trees,
    };

    let mut population: Vec<Mask> = (0..config.population_size)
        .map(|i| {
            let mut rng = rng_from(mix_path(config.seed, &[STREAM_INIT, 0, i as u64]));
            random_mask(p, config.init_density, &mut rng)
        })
        .collect();
    let mut cache: HashMap<Mask, f64> = HashMap::new();
    let mut tally = vec![0usize; p];
    let mut trace = Vec::with_capacity(config.generations);
    let mut best_mask = Vec::new();
    let mut best_fitness = f64::NEG_INFINITY;

    for g in 0..config.generations {
        let mut pending: Vec<(usize, &Mask)> = Vec::new();
        for (i, mask) in population.iter().enumerate() {
            if !cache.contains_key(mask) && !pending.iter().any(|(_, m)| *m == mask) {
                pending.push((i, mask));
            }
        }
        let evaluated: Vec<(Mask, f64)> = pending
            .par_iter()
            .map(|&(i, mask)| {
                let seed = mix_path(config.seed, &[STREAM_FITNESS, g as u64, i as u64]);
                fitness_fn.evaluate(mask, seed).map(|f| (mask.clone(), f))
            })
            .collect::<Result<_>>()?;
        let evaluations = evaluated.len();
        cache.extend(evaluated);
        let fitness: Vec<f64> = population.iter().map(|m| cache[m]).collect();

        let mut total_active = 0;
        for mask in &population {
            for (t, &b) in tally.iter_mut().zip(mask) {
                *t += b as usize;
            }
            total_active += mask.iter().filter(|&&b| b).count();
        }
        let elite = (0..fitness.len()).fold(0, |b, i| if fitness[i] > fitness[b] { i } else { b });
        if fitness[elite] > best_fitness {
            best_fitness = fitness[elite];
            best_mask = active(&population[elite]);
        }
        trace.push(GenerationStats {
            generation: g,
            best: fitness[elite],
            mean: fitness.iter().sum::<f64>() / fitness.len() as f64,
            mean_active: total_active as f64 / population.len() as f64,
            evaluations,
        });
        if g + 1 == config.generations {
            break;
        }

        let mut next = Vec::with_capacity(config.population_size);
        next.push(population[elite].clone());
        let mut slot = 0u64;
        while next.len() < config.population_size {
            let mut rng = rng_from(mix_path(config.seed, &[STREAM_BREED, g as u64, slot]));
            slot += 1;
            let a = &population[tournament(&fitness, config.tournament_size, &mut rng)];
            let b = &population[tournament(&fitness, config.tournament_size, &mut rng)];
            let (mut c1, mut c2) = (a.clone(), b.clone());
            if rng.random_bool(config.crossover_prob) {
                for j in 0..p {
                    if rng.random_bool(0.5) {
                        std::mem::swap(&mut c1[j], &mut c2[j]);
                    }
                }
            }
            for child in [c1, c2] {
                if next.len() == config.population_size {
                    break;
                }
                let mut child = child;
                for bit in child.iter_mut() {
                    if rng.random_bool(config.mutation_prob) {
                        *bit = !*bit;
                    }
                }
                if !child.iter().any(|&b| b) {
                    child = random_mask(p, config.init_density, &mut rng);
                }
                next.push(child);
            }
        }
        population = next;
    }

    let total = (config.generations * config.population_size) as f64;
    let frequencies: Vec<f64> = tally.iter().map(|&t| t as f64 / total).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| tally[b].cmp(&tally[a]).then(a.cmp(&b)));
    order.truncate(config.top_k);
    Ok(GaOutcome {
        subset: FeatureSubset::new(Provenance::Ga, order),
        frequencies,
        trace,
        best_mask,
        best_fitness,
    })
}
