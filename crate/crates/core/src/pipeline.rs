//! End-to-end glue: records → scaled windows → fitted model → detected
//! anomalies → importance weights → explanations.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::anomaly::{classify, compute_errors, fit_threshold, AnomalyRecord, AnomalyThreshold};
use crate::context::{transform_gfi, GlobalImportance};
use crate::dataset::{
    apply_scaler, chronological_split, engineer_features, fit_scaler, make_windows, DatasetMetadata,
    FeatureMatrix, SplitFractions, TimeSeriesRecord, WindowedDataset,
};
use crate::error::{Error, Result};
use crate::predictor::{fit_forest, forest_importance, ForestConfig, Predictor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub window_length: usize,
    pub horizon: usize,
    pub fractions: SplitFractions,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_length: 48,
            horizon: 24,
            fractions: SplitFractions::default(),
        }
    }
}

/// Scaled, windowed train/validation/test views of one series.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: WindowedDataset,
    pub validation: WindowedDataset,
    pub test: WindowedDataset,
    pub metadata: DatasetMetadata,
}

impl PreparedData {
    pub fn feature_names(&self) -> &[String] {
        &self.metadata.feature_order
    }
}

pub fn prepare(records: &[TimeSeriesRecord], cfg: &WindowConfig) -> Result<PreparedData> {
    prepare_features(&engineer_features(records)?, cfg)
}

pub fn prepare_features(features: &FeatureMatrix, cfg: &WindowConfig) -> Result<PreparedData> {
    let span = cfg.window_length + cfg.horizon;
    let splits = chronological_split(features, cfg.fractions, span)?;
    let scaling = fit_scaler(&splits.train)?;
    let window = |m: &FeatureMatrix| make_windows(&apply_scaler(m, &scaling)?, cfg.window_length, cfg.horizon);
    Ok(PreparedData {
        train: window(&splits.train)?,
        validation: window(&splits.validation)?,
        test: window(&splits.test)?,
        metadata: DatasetMetadata {
            feature_order: features.columns.clone(),
            target_column: features.target_column.clone(),
            scaling,
            splits: splits.boundaries,
            window_length: cfg.window_length,
            n_features: features.n_features(),
            horizon: cfg.horizon,
        },
    })
}

/// Threshold fitted on training residuals and the classified test windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub threshold: AnomalyThreshold,
    pub records: Vec<AnomalyRecord>,
}

impl Detection {
    pub fn anomalies(&self) -> impl Iterator<Item = &AnomalyRecord> {
        self.records.iter().filter(|r| r.is_anomalous())
    }

    pub fn anomaly_count(&self) -> usize {
        self.anomalies().count()
    }
}

pub fn detect<P: Predictor + ?Sized>(model: &P, data: &PreparedData) -> Result<Detection> {
    let threshold = fit_threshold(&compute_errors(model, &data.train)?)?;
    let records = classify(&compute_errors(model, &data.test)?, &threshold);
    Ok(Detection { threshold, records })
}

/// Fits the surrogate forest on the training windows' first-horizon target
/// and sharpens its importances.
pub fn global_importance(data: &PreparedData, cfg: &ForestConfig) -> Result<GlobalImportance> {
    let forest = fit_forest(data.train.flat_inputs(), data.train.targets_at(0), cfg)?;
    transform_gfi(&forest_importance(&forest)?)
}

/// Flattened test windows for the given window indices, one per row.
pub fn windows_at(ds: &WindowedDataset, indices: &[usize]) -> Result<Array2<f64>> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::Lookup(format!("window {bad} is outside the {} windows", ds.len())));
    }
    Ok(ds.flat_inputs().select(Axis(0), indices))
}
