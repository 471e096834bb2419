//! Shapley-value attributions for one forecast output.
//!
//! All explainers share the interventional value function of
//! [`MaskedGame`]: features outside a coalition take their values from each
//! background row in turn and the model outputs are averaged. Attributions
//! live in the flattened window space, one value per (time step, feature).

mod exact;
mod game;
mod kernel;
mod walk;

pub use exact::exact_shapley;
pub use game::{MaskedGame, Scratch};
pub use kernel::{kernel_shap, kernel_weight};
pub use walk::{permutation_shap, sampling_shap};

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::Predictor;

/// Largest feature count the exact oracle accepts.
pub const EXACT_MAX_FEATURES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kernel,
    Sampling,
    Permutation,
    Exact,
}

impl Method {
    pub const SAMPLED: [Method; 3] = [Method::Kernel, Method::Sampling, Method::Permutation];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Kernel => "kernel",
            Method::Sampling => "sampling",
            Method::Permutation => "permutation",
            Method::Exact => "exact",
        }
    }

    /// Allowed gap between `phi0 + Σφ` and `f_x`.
    pub fn efficiency_tolerance(self) -> f64 {
        match self {
            Method::Kernel | Method::Exact => 1e-8,
            Method::Sampling | Method::Permutation => 1e-9,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(Method::Kernel),
            "sampling" => Ok(Method::Sampling),
            "permutation" => Ok(Method::Permutation),
            "exact" => Ok(Method::Exact),
            other => Err(Error::Parameter(format!(
                "unknown method `{other}` (expected kernel, sampling, permutation or exact)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainerConfig {
    /// Coalitions for kernel, permutations for sampling, antithetic pairs
    /// for permutation.
    pub n_samples: usize,
    pub seed: u64,
    /// Kernel SHAP enumerates every coalition up to this many features.
    pub enumerate_threshold: usize,
    /// Forecast output being explained.
    pub horizon: usize,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            n_samples: 2048,
            seed: 0,
            enumerate_threshold: 13,
            horizon: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub phi: Vec<f64>,
    pub phi0: f64,
    pub f_x: f64,
    pub method: Method,
    /// Number of model predict calls made.
    pub n_evals: usize,
    pub seed: Option<u64>,
    /// Per-feature standard errors for the sampling estimators.
    pub std_err: Option<Vec<f64>>,
    pub horizon: usize,
}

impl Attribution {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// `phi0 + Σφ − f_x`.
    pub fn efficiency_gap(&self) -> f64 {
        self.phi0 + self.phi.iter().sum::<f64>() - self.f_x
    }

    /// Attribution entries keyed by window position, for export.
    pub fn entries(&self, feature_names: &[String]) -> Result<Vec<AttributionEntry>> {
        let f = feature_names.len();
        if f == 0 || self.phi.len() % f != 0 {
            return Err(Error::Shape(format!(
                "{} attributions cannot be laid out over {f} features",
                self.phi.len()
            )));
        }
        Ok(self
            .phi
            .iter()
            .enumerate()
            .map(|(k, &phi)| AttributionEntry {
                time_step: k / f,
                feature: feature_names[k % f].clone(),
                phi,
            })
            .collect())
    }

    pub fn export(&self, feature_names: &[String]) -> Result<AttributionExport> {
        Ok(AttributionExport {
            method: self.method,
            seed: self.seed,
            n_evals: self.n_evals,
            horizon: self.horizon,
            phi0: self.phi0,
            f_x: self.f_x,
            phi: self.entries(feature_names)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionEntry {
    pub time_step: usize,
    pub feature: String,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionExport {
    pub method: Method,
    pub seed: Option<u64>,
    pub n_evals: usize,
    pub horizon: usize,
    pub phi0: f64,
    pub f_x: f64,
    pub phi: Vec<AttributionEntry>,
}

pub fn base_value<P: Predictor + ?Sized>(
    model: &P,
    background: ArrayView2<'_, f64>,
    horizon: usize,
) -> Result<f64> {
    if background.nrows() == 0 {
        return Err(Error::Input("background set is empty".into()));
    }
    let out = model.predict_output(background, horizon)?;
    Ok(out.iter().sum::<f64>() / out.len() as f64)
}

/// `v(S)` for the coalition given by feature indices.
pub fn masked_prediction<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView1<'_, f64>,
    coalition: &[usize],
    background: ArrayView2<'_, f64>,
    horizon: usize,
) -> Result<f64> {
    let game = MaskedGame::new(model, x, background, horizon)?;
    let mut mask = vec![false; game.n_features()];
    for &i in coalition {
        *mask.get_mut(i).ok_or_else(|| {
            Error::Shape(format!("coalition member {i} outside {} features", x.len()))
        })? = true;
    }
    game.value(&mask)
}

/// Runs one method by name.
pub fn explain<P: Predictor + ?Sized>(
    method: Method,
    model: &P,
    x: ArrayView1<'_, f64>,
    background: ArrayView2<'_, f64>,
    cfg: &ExplainerConfig,
) -> Result<Attribution> {
    match method {
        Method::Kernel => kernel_shap(model, x, background, cfg),
        Method::Sampling => sampling_shap(model, x, background, cfg),
        Method::Permutation => permutation_shap(model, x, background, cfg),
        Method::Exact => exact_shapley(model, x, background, cfg.horizon),
    }
}
