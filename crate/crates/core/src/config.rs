//! TOML run configuration and output manifests.
//!
//! Every key is optional; command-line flags are applied on top of the file and
//! the merged values are what the manifest records. A full file looks like:
//!
//! ```toml
//! seed = 7
//! repetitions = 500
//!
//! [mixture]
//! k = 4
//! d = 10
//! sigma = 2.0
//! points_per_cluster = 100
//! centroid_radius = 5.0
//!
//! [outliers]
//! count = 60
//! sigma_out = 10.0
//! center_norm = 0.0        # or: center = [0.0, ...]
//!
//! [run]
//! eps = 0.001
//! max_iter = 100
//!
//! [cluster]
//! algorithm = "hybrid"
//! init = "omniscient"
//!
//! [regime]
//! sweep = [0, 20, 40, 60, 80]
//! inits = ["random", "omniscient"]
//! algorithms = ["kmeans", "kmedians-l1", "hybrid"]
//!
//! [demo]
//! sigma = 10.0
//! points_per_cluster = 500
//!
//! [decay]
//! snrs = [1.0, 1.5, 2.0]
//! d = 1
//! sigma = 1.0
//! points_per_cluster = 500
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, RunConfig};
use crate::datagen::MixtureConfig;
use crate::error::{Error, Result};
use crate::experiments::InitKind;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub mixture: MixturePatch,
    #[serde(default)]
    pub outliers: OutlierPatch,
    #[serde(default)]
    pub run: RunPatch,
    #[serde(default)]
    pub cluster: ClusterPatch,
    #[serde(default)]
    pub regime: RegimePatch,
    #[serde(default)]
    pub demo: DemoPatch,
    #[serde(default)]
    pub decay: DecayPatch,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixturePatch {
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub sigma: Option<f64>,
    pub points_per_cluster: Option<usize>,
    pub centroid_radius: Option<f64>,
    pub cluster_sizes: Option<Vec<usize>>,
}

impl MixturePatch {
    pub fn apply(&self, base: &mut MixtureConfig) {
        if let Some(v) = self.k {
            base.k = v;
        }
        if let Some(v) = self.d {
            base.d = v;
        }
        if let Some(v) = self.sigma {
            base.sigma = v;
        }
        if let Some(v) = self.points_per_cluster {
            base.points_per_cluster = v;
        }
        if let Some(v) = self.centroid_radius {
            base.centroid_radius = v;
        }
        if let Some(v) = &self.cluster_sizes {
            base.cluster_sizes = Some(v.clone());
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlierPatch {
    pub count: Option<usize>,
    pub sigma_out: Option<f64>,
    /// Explicit outlier center.
    pub center: Option<Vec<f64>>,
    /// Distance of the outlier center from the origin along a random direction.
    pub center_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunPatch {
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
}

impl RunPatch {
    pub fn resolve(&self) -> RunConfig {
        let mut run = RunConfig::default();
        if let Some(v) = self.eps {
            run.eps = v;
        }
        if let Some(v) = self.max_iter {
            run.max_iter = v;
        }
        run
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterPatch {
    pub algorithm: Option<Algorithm>,
    pub init: Option<InitKind>,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimePatch {
    pub sweep: Option<Vec<f64>>,
    pub inits: Option<Vec<InitKind>>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub outlier_count: Option<usize>,
    pub sigma_out: Option<f64>,
    pub outlier_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoPatch {
    pub sigma: Option<f64>,
    pub points_per_cluster: Option<usize>,
    pub centroids: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayPatch {
    pub snrs: Option<Vec<f64>>,
    pub d: Option<usize>,
    pub sigma: Option<f64>,
    pub points_per_cluster: Option<usize>,
    pub algorithms: Option<Vec<Algorithm>>,
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    /// File names (relative to the output directory) this manifest describes.
    pub outputs: Vec<String>,
    pub config: T,
}

impl<T: Serialize> Manifest<T> {
    pub fn new(command: impl Into<String>, seed: u64, outputs: Vec<String>, config: T) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed,
            outputs,
            config,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
