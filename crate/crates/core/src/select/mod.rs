//! Supervised wavelength selection.

pub mod ga;
pub mod mr;

use serde::{Deserialize, Serialize};

pub use ga::{ga_select, GaConfig, GaOutcome};
pub use mr::{mr_scores, MrRanking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Mr,
    Ga,
}

/// A sorted set of selected feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub provenance: Provenance,
    pub indices: Vec<usize>,
}

impl FeatureSubset {
    pub fn new(provenance: Provenance, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { provenance, indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// JSON export `{provenance, indices, wavelengths}`.
    pub fn to_json(&self, grid: &crate::dataset::WavelengthGrid) -> crate::Result<String> {
        #[derive(Serialize)]
        struct Export<'a> {
            provenance: Provenance,
            indices: &'a [usize],
            wavelengths: Vec<f64>,
        }
        let wavelengths = self.indices.iter().map(|&i| grid.values()[i]).collect();
        Ok(serde_json::to_string_pretty(&Export {
            provenance: self.provenance,
            indices: &self.indices,
            wavelengths,
        })?)
    }
}
