//! Shared fixtures for the criterion benchmarks.

use chemoclass::dataset::{synth_spectra, SynthConfig};
use chemoclass::SpectraDataset;

/// Meat-shaped synthetic spectra: 5 classes, `per_class` rows each, `p`
/// wavelengths.
pub fn spectra(per_class: usize, p: usize) -> SpectraDataset {
    let informative = (1..=10).map(|i| i * p / 11).collect();
    synth_spectra(&SynthConfig::new(per_class, p, 5, informative, 7)).expect("valid synthetic configuration")
}
