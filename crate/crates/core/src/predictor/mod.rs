//! The black-box forecasting contract and the built-in models.
//!
//! Explainers only ever call [`Predictor::predict_output`], so any model that
//! maps flattened windows to horizon outputs can be explained.

mod forest;
mod metrics;
mod mlp;
mod ridge;

pub use forest::{fit_forest, forest_importance, ForestConfig, RandomForestRegressor};
pub use metrics::{ForecastMetrics, HorizonMetrics};
pub use mlp::{fit_mlp, MlpConfig, MlpForecaster};
pub use ridge::{fit_ridge, RidgeForecaster};

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, ArrayView3};
use serde::{Deserialize, Serialize};

use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};

/// A fitted forecaster. Implementations must be deterministic: the same
/// input rows give bit-identical outputs regardless of batch size or
/// position within the batch.
pub trait Predictor: Send + Sync {
    fn name(&self) -> &'static str;

    /// Length of a flattened input window, I·F.
    fn input_dim(&self) -> usize;

    /// Number of horizon outputs.
    fn output_dim(&self) -> usize;

    /// M × (I·F) → M × h.
    fn predict_flat(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>>;

    /// One horizon column only. Models override this when a single output
    /// is cheaper than all of them.
    fn predict_output(&self, inputs: ArrayView2<'_, f64>, output: usize) -> Result<Array1<f64>> {
        check_output(self, output)?;
        Ok(self.predict_flat(inputs)?.column(output).to_owned())
    }

    /// M × I × F → M × h.
    fn predict(&self, inputs: ArrayView3<'_, f64>) -> Result<Array2<f64>> {
        let (m, i, f) = inputs.dim();
        if i * f != self.input_dim() {
            return Err(Error::Shape(format!(
                "{}: windows of {i}×{f} do not match input dimension {}",
                self.name(),
                self.input_dim()
            )));
        }
        let flat = crate::dataset::flatten_batch(inputs);
        debug_assert_eq!(flat.nrows(), m);
        self.predict_flat(flat.view())
    }
}

pub(crate) fn check_input<P: Predictor + ?Sized>(p: &P, inputs: &ArrayView2<'_, f64>) -> Result<()> {
    if inputs.ncols() != p.input_dim() {
        return Err(Error::Shape(format!(
            "{}: expected {} input columns, got {}",
            p.name(),
            p.input_dim(),
            inputs.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn check_output<P: Predictor + ?Sized>(p: &P, output: usize) -> Result<()> {
    if output >= p.output_dim() {
        return Err(Error::Shape(format!(
            "{}: output {output} requested but the model has {}",
            p.name(),
            p.output_dim()
        )));
    }
    Ok(())
}

/// Dot product with a fixed summation order (four interleaved partial sums).
/// Used by every model so predictions do not depend on batch layout.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Model kind plus hyperparameters; everything needed to refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Ridge { l2_lambda: f64 },
    Mlp(MlpConfig),
    Forest(ForestConfig),
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Ridge { l2_lambda: 1.0 }
    }
}

impl ModelSpec {
    pub fn fit(&self, train: &WindowedDataset) -> Result<Model> {
        Ok(match self {
            ModelSpec::Ridge { l2_lambda } => Model::Ridge(fit_ridge(train, *l2_lambda)?),
            ModelSpec::Mlp(cfg) => Model::Mlp(fit_mlp(train, cfg)?),
            ModelSpec::Forest(cfg) => {
                let forest = RandomForestRegressor::new(cfg.clone())
                    .fit(train.flat_inputs(), train.targets.view())?;
                Model::Forest(forest)
            }
        })
    }
}

/// Any built-in model, serializable as a versioned artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Ridge(RidgeForecaster),
    Mlp(MlpForecaster),
    Forest(RandomForestRegressor),
}

impl Model {
    fn inner(&self) -> &dyn Predictor {
        match self {
            Model::Ridge(m) => m,
            Model::Mlp(m) => m,
            Model::Forest(m) => m,
        }
    }
}

impl Predictor for Model {
    fn name(&self) -> &'static str {
        self.inner().name()
    }
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }
    fn output_dim(&self) -> usize {
        self.inner().output_dim()
    }
    fn predict_flat(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.inner().predict_flat(inputs)
    }
    fn predict_output(&self, inputs: ArrayView2<'_, f64>, output: usize) -> Result<Array1<f64>> {
        self.inner().predict_output(inputs, output)
    }
}

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub model: Model,
}

impl ModelArtifact {
    pub fn new(spec: ModelSpec, model: Model) -> Self {
        Self {
            format_version: ARTIFACT_VERSION,
            spec,
            model,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let artifact: Self = serde_json::from_reader(std::io::BufReader::new(file))?;
        if artifact.format_version != ARTIFACT_VERSION {
            return Err(Error::Input(format!(
                "model artifact version {} is not supported (expected {ARTIFACT_VERSION})",
                artifact.format_version
            )));
        }
        Ok(artifact)
    }
}
