use std::path::{Path, PathBuf};

use anomex_core::analyze::BenchmarkConfig;
use anomex_core::context::{Selection, SimilarityForm, DEFAULT_K};
use anomex_core::dataset::CsvSchema;
use anomex_core::explain::Method;
use anomex_core::pipeline::WindowConfig;
use anomex_core::predictor::{ForestConfig, ModelSpec};
use anomex_core::synth::{AnomalySpec, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Every tunable of a run. Loaded from TOML, then overridden by flags; the
/// effective value is echoed into each run directory's manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub anomalies: AnomalyConfig,
    pub window: WindowConfig,
    pub model: ModelSpec,
    /// Surrogate forest behind the similarity weights.
    pub importance: ForestConfig,
    pub background: BackgroundConfig,
    pub explain: ExplainConfig,
    pub benchmark: BenchmarkSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            synth: SynthConfig::default(),
            anomalies: AnomalyConfig::default(),
            window: WindowConfig::default(),
            model: ModelSpec::default(),
            importance: ForestConfig::default(),
            background: BackgroundConfig::default(),
            explain: ExplainConfig::default(),
            benchmark: BenchmarkSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub input: Option<PathBuf>,
    pub schema: CsvSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnomalyConfig {
    #[serde(flatten)]
    pub spec: AnomalySpec,
    pub seed: u64,
}

impl Default for AnomalyConfig {
    fn default() -> Self {
        Self {
            spec: AnomalySpec::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundConfig {
    pub k: usize,
    pub selection: Selection,
    pub similarity: SimilarityForm,
    /// Used by random selection only.
    pub seed: u64,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            selection: Selection::Similar,
            similarity: SimilarityForm::Standard,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub method: Method,
    pub n_samples: usize,
    pub seed: u64,
    pub enumerate_threshold: usize,
    pub horizon: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            method: Method::Kernel,
            n_samples: 4096,
            seed: 0,
            enumerate_threshold: 13,
            horizon: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSection {
    #[serde(flatten)]
    pub stability: BenchmarkConfig,
    /// Upper bound on detected test anomalies fed to the benchmark.
    pub max_anomalies: usize,
    /// Label written in the table's dataset column.
    pub dataset_label: String,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            stability: BenchmarkConfig::default(),
            max_anomalies: 30,
            dataset_label: "synthetic".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, UsageError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
    }
}
