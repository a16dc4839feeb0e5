//! Labelled spectra: ingestion, validation, splitting and synthetic data.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mix_seed, rng_from};

/// Ordered wavelengths (nm) at which absorbances are recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WavelengthGrid(Vec<f64>);

impl WavelengthGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDataset("wavelength grid is empty".into()));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "wavelength {bad} is not finite"
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDataset(format!(
                "wavelengths must be strictly increasing ({} followed by {})",
                values[i],
                values[i + 1]
            )));
        }
        Ok(Self(values))
    }

    /// Grid `0, 1, ..., p-1`.
    pub fn indices(p: usize) -> Self {
        Self((0..p).map(|i| i as f64).collect())
    }

    /// `p` equally spaced wavelengths from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, p: usize) -> Result<Self> {
        if p == 1 {
            return Self::new(vec![start]);
        }
        let step = (end - start) / (p - 1) as f64;
        Self::new((0..p).map(|i| start + step * i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WavelengthGrid {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<WavelengthGrid> for Vec<f64> {
    fn from(grid: WavelengthGrid) -> Self {
        grid.0
    }
}

/// An `n x p` absorbance matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraDataset {
    absorbances: DMatrix<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    grid: WavelengthGrid,
}

impl SpectraDataset {
    pub fn new(
        absorbances: DMatrix<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        grid: WavelengthGrid,
    ) -> Result<Self> {
        let (n, p) = absorbances.shape();
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no samples".into()));
        }
        if p != grid.len() {
            return Err(Error::InvalidDataset(format!(
                "{p} feature columns but {} wavelengths",
                grid.len()
            )));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{n} rows but {} labels",
                labels.len()
            )));
        }
        if absorbances.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite absorbance".into()));
        }
        let k = class_names.len();
        let mut counts = vec![0usize; k];
        for &label in &labels {
            if label >= k {
                return Err(Error::InvalidDataset(format!(
                    "label {label} out of range for {k} classes"
                )));
            }
            counts[label] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidDataset(format!(
                "class '{}' has no samples",
                class_names[empty]
            )));
        }
        Ok(Self {
            absorbances,
            labels,
            class_names,
            grid,
        })
    }

    pub fn absorbances(&self) -> &DMatrix<f64> {
        &self.absorbances
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn n_samples(&self) -> usize {
        self.absorbances.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.absorbances.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.n_classes())
    }

    /// Rows of the absorbance matrix at `indices`, in order.
    pub fn rows(&self, indices: &[usize]) -> DMatrix<f64> {
        self.absorbances.select_rows(indices)
    }

    pub fn labels_at(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }

    /// Reads a dataset from CSV with header `label,w_1,...,w_p`.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::read_csv(file).map_err(|e| match e {
            Error::Load { .. } => e,
            other => Error::Load {
                path: path.to_path_buf(),
                reason: other.to_string(),
            },
        })
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::InvalidDataset(
                "header must contain a label column and at least one wavelength".into(),
            ));
        }
        if !headers[0].eq_ignore_ascii_case("label") {
            return Err(Error::InvalidDataset(format!(
                "first header must be 'label', found '{}'",
                &headers[0]
            )));
        }
        let wavelengths = headers
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, h)| {
                h.parse::<f64>().map_err(|_| {
                    Error::InvalidDataset(format!(
                        "wavelength header {} ('{h}') is not numeric",
                        j + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = WavelengthGrid::new(wavelengths)?;
        let p = grid.len();

        let mut class_index: HashMap<String, usize> = HashMap::new();
        let mut class_names = Vec::new();
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let line = row + 2;
            let record = record.map_err(|e| {
                Error::InvalidDataset(format!("line {line}: {e}"))
            })?;
            if record.len() != p + 1 {
                return Err(Error::InvalidDataset(format!(
                    "line {line}: expected {} fields, found {}",
                    p + 1,
                    record.len()
                )));
            }
            let name = &record[0];
            if name.is_empty() {
                return Err(Error::InvalidDataset(format!("line {line}: empty class label")));
            }
            let next = class_names.len();
            let label = *class_index.entry(name.to_string()).or_insert_with(|| {
                class_names.push(name.to_string());
                next
            });
            labels.push(label);
            for (j, cell) in record.iter().skip(1).enumerate() {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::InvalidDataset(format!(
                        "line {line}, column {}: '{cell}' is not numeric",
                        j + 2
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidDataset(format!(
                        "line {line}, column {}: non-finite value",
                        j + 2
                    )));
                }
                values.push(v);
            }
        }
        let n = labels.len();
        let absorbances = DMatrix::from_row_slice(n, p, &values);
        Self::new(absorbances, labels, class_names, grid)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Writes the dataset as CSV. Values use the shortest representation
    /// that reads back to the identical `f64`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(self.n_features() + 1);
        header.push("label".to_string());
        header.extend(self.grid.values().iter().map(|w| w.to_string()));
        wtr.write_record(&header)?;
        let mut record = Vec::with_capacity(self.n_features() + 1);
        for i in 0..self.n_samples() {
            record.clear();
            record.push(self.class_names[self.labels[i]].clone());
            record.extend(self.absorbances.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn class_counts(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Per-class sample indices in ascending order.
pub fn class_members(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    members
}

/// Disjoint train/test index sets covering every sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTestSplit {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl TrainTestSplit {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Number of training samples drawn from a class of `n_class` samples:
/// `floor(fraction * n_class + 0.5)`, the remainder going to test.
pub fn train_count(n_class: usize, fraction: f64) -> usize {
    (fraction * n_class as f64 + 0.5).floor() as usize
}

/// Samples `train_count(n_c, fraction)` training indices without replacement
/// from every class. Index lists are returned sorted.
pub fn stratified_split(
    data: &SpectraDataset,
    fraction: f64,
    seed: u64,
) -> Result<TrainTestSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut rng = rng_from(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut members) in class_members(data.labels(), data.n_classes())
        .into_iter()
        .enumerate()
    {
        let n_c = members.len();
        let take = train_count(n_c, fraction);
        if take == 0 || take == n_c {
            return Err(Error::Split {
                class: data.class_names()[c].clone(),
                available: n_c,
            });
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(TrainTestSplit { seed, train, test })
}

/// `count` independent stratified splits; split `i` uses seed
/// [`mix_seed`]`(seed, i)`.
pub fn repeated_splits(
    data: &SpectraDataset,
    fraction: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<TrainTestSplit>> {
    if count == 0 {
        return Err(Error::InvalidArgument("split count must be at least 1".into()));
    }
    (0..count)
        .map(|i| stratified_split(data, fraction, mix_seed(seed, i as u64)))
        .collect()
}

/// Assigns each sample to one of `folds` cross-validation folds so that every
/// class is spread over the folds as evenly as possible. Members of each
/// class are shuffled and dealt round-robin, continuing where the previous
/// class stopped.
pub fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > labels.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot form {folds} folds from {} samples",
            labels.len()
        )));
    }
    let mut rng = rng_from(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for mut members in class_members(labels, n_classes) {
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// Parameters of the synthetic spectra generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub p: usize,
    pub k: usize,
    /// Feature indices around which class-specific absorbance bumps sit.
    pub informative: Vec<usize>,
    /// Standard deviation of the white measurement noise.
    pub noise_sd: f64,
    /// Width (in features) of each class bump. Zero confines the class
    /// signal to exactly the informative indices.
    pub bump_width: f64,
    /// Height difference between the extreme class levels of a bump.
    pub signal: f64,
    /// Standard deviation of the per-sample smooth baseline drift.
    pub drift_sd: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_per_class: usize, p: usize, k: usize, informative: Vec<usize>, seed: u64) -> Self {
        Self {
            n_per_class,
            p,
            k,
            informative,
            noise_sd: 0.01,
            bump_width: 2.0,
            signal: 1.0,
            drift_sd: 0.05,
            seed,
        }
    }
}

/// Generates smooth, serially correlated spectra with a class signal
/// confined to the neighbourhood of `informative` features.
///
/// Every spectrum is a broad absorbance hump shared by all classes, plus the
/// class mean's Gaussian bumps, plus a per-sample smooth drift (random offset,
/// slope and curvature), plus white noise. At each informative index the `k`
/// classes take a seeded permutation of `k` evenly spaced levels spanning
/// `signal`, so every informative feature separates every pair of classes.
pub fn synth_spectra(config: &SynthConfig) -> Result<SpectraDataset> {
    let SynthConfig {
        n_per_class,
        p,
        k,
        ref informative,
        noise_sd,
        bump_width,
        signal,
        drift_sd,
        seed,
    } = *config;
    if n_per_class == 0 || p == 0 || k == 0 {
        return Err(Error::InvalidArgument(
            "n_per_class, p and k must all be positive".into(),
        ));
    }
    if let Some(&bad) = informative.iter().find(|&&i| i >= p) {
        return Err(Error::InvalidArgument(format!(
            "informative index {bad} out of range for p = {p}"
        )));
    }
    if !(noise_sd >= 0.0 && drift_sd >= 0.0 && bump_width >= 0.0 && signal.is_finite()) {
        return Err(Error::InvalidArgument("noise, drift and width must be non-negative".into()));
    }

    let mut rng = rng_from(seed);
    let t = |j: usize| if p == 1 { 0.0 } else { j as f64 / (p - 1) as f64 };
    let base: Vec<f64> = (0..p)
        .map(|j| {
            let x = t(j);
            1.0 + 0.4 * x + 1.2 * (-((x - 0.55) / 0.3).powi(2)).exp()
        })
        .collect();

    let levels: Vec<f64> = (0..k)
        .map(|c| {
            if k == 1 {
                0.0
            } else {
                signal * (c as f64 / (k - 1) as f64 - 0.5)
            }
        })
        .collect();
    let mut means = vec![base.clone(); k];
    for &centre in informative {
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        for (c, mean) in means.iter_mut().enumerate() {
            let height = levels[perm[c]];
            for (j, m) in mean.iter_mut().enumerate() {
                let d = j as f64 - centre as f64;
                let shape = if bump_width == 0.0 {
                    if j == centre { 1.0 } else { 0.0 }
                } else {
                    (-0.5 * (d / bump_width).powi(2)).exp()
                };
                *m += height * shape;
            }
        }
    }

    let n = n_per_class * k;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values = DMatrix::zeros(n, p);
    let mut labels = Vec::with_capacity(n);
    for c in 0..k {
        for s in 0..n_per_class {
            let i = c * n_per_class + s;
            labels.push(c);
            let offset = drift_sd * std_normal.sample(&mut rng);
            let slope = drift_sd * std_normal.sample(&mut rng);
            let curve = drift_sd * std_normal.sample(&mut rng);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            for j in 0..p {
                let x = t(j);
                let drift = offset + slope * (x - 0.5) + curve * (std::f64::consts::PI * x + phase).sin();
                let white = if noise_sd > 0.0 {
                    noise_sd * std_normal.sample(&mut rng)
                } else {
                    0.0
                };
                values[(i, j)] = means[c][j] + drift + white;
            }
        }
    }
    let class_names = (0..k).map(|c| format!("class{c}")).collect();
    SpectraDataset::new(values, labels, class_names, WavelengthGrid::linspace(1100.0, 2498.0, p)?)
}
