//! Ingestion, feature engineering, scaling, splitting and windowing of
//! hourly energy-consumption series.

mod features;
mod ingest;
mod scale;
mod split;
mod window;

pub use features::{
    engineer_features, engineer_features_with, FeatureMatrix, ImputePolicy, FEATURE_NAMES,
    TARGET_COLUMN,
};
pub use ingest::{
    ingest_csv, read_csv, write_csv, CsvSchema, IngestReport, Ingested, TimeSeriesRecord,
    TIMESTAMP_FORMAT,
};
pub use scale::{apply_scaler, fit_scaler, invert_scaler, ScalingParams};
pub use split::{chronological_split, SplitBoundaries, SplitFractions, Splits};
pub use window::{flatten_batch, flatten_window, make_windows, unflatten, WindowedDataset};

use serde::{Deserialize, Serialize};

/// Everything needed to rebuild the exact scaled, windowed view of a series:
/// feature order, scaling parameters, split boundaries and window geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub feature_order: Vec<String>,
    pub target_column: String,
    pub scaling: ScalingParams,
    pub splits: SplitBoundaries,
    pub window_length: usize,
    pub n_features: usize,
    pub horizon: usize,
}
