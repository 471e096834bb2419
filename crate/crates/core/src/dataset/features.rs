use chrono::{Datelike, NaiveDateTime, Timelike};
use ndarray::{s, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::ingest::TimeSeriesRecord;
use crate::error::{Error, Result};

pub const TARGET_COLUMN: &str = "energy";

/// Canonical column order. Flattened feature indices depend on it, so it
/// must never change between runs.
pub const FEATURE_NAMES: [&str; 10] = [
    "energy",
    "hour",
    "day_of_week",
    "day_of_month",
    "day_of_year",
    "month",
    "weekend",
    "temperature",
    "humidity",
    "wind_speed",
];

const WEATHER_START: usize = 7;

/// How gaps in weather channels are filled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ImputePolicy {
    /// Carry the last observation forward, then fill any leading gap with
    /// the first observation.
    #[default]
    ForwardBackward,
    /// Replace every missing value with a constant. Works even when a
    /// channel is entirely absent.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    /// T × F, one row per timestamp.
    pub values: Array2<f64>,
    pub target_column: String,
    pub timestamps: Vec<NaiveDateTime>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn target_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| *c == self.target_column)
            .unwrap_or(0)
    }

    pub fn target(&self) -> ArrayView1<'_, f64> {
        self.values.column(self.target_index())
    }

    /// Contiguous row slice `[start, end)`.
    pub fn rows(&self, start: usize, end: usize) -> FeatureMatrix {
        FeatureMatrix {
            columns: self.columns.clone(),
            values: self.values.slice(s![start..end, ..]).to_owned(),
            target_column: self.target_column.clone(),
            timestamps: self.timestamps[start..end].to_vec(),
        }
    }
}

pub fn engineer_features(records: &[TimeSeriesRecord]) -> Result<FeatureMatrix> {
    engineer_features_with(records, ImputePolicy::default())
}

pub fn engineer_features_with(
    records: &[TimeSeriesRecord],
    impute: ImputePolicy,
) -> Result<FeatureMatrix> {
    if records.is_empty() {
        return Err(Error::Input("no records to engineer features from".into()));
    }
    if records.windows(2).any(|w| w[0].timestamp >= w[1].timestamp) {
        return Err(Error::Input(
            "records must be sorted by strictly increasing timestamp".into(),
        ));
    }

    let t = records.len();
    let mut values = Array2::<f64>::zeros((t, FEATURE_NAMES.len()));
    for (row, rec) in values.outer_iter_mut().zip(records) {
        let mut row = row;
        let cal = calendar_features(rec.timestamp);
        row[0] = rec.energy;
        for (i, v) in cal.iter().enumerate() {
            row[1 + i] = *v;
        }
    }

    let channels: [(&str, fn(&TimeSeriesRecord) -> Option<f64>); 3] = [
        ("temperature", |r| r.temperature),
        ("humidity", |r| r.humidity),
        ("wind_speed", |r| r.wind_speed),
    ];
    for (k, (name, get)) in channels.iter().enumerate() {
        let raw: Vec<Option<f64>> = records.iter().map(get).collect();
        let filled = impute_channel(&raw, impute).ok_or_else(|| {
            Error::Input(format!(
                "weather column `{name}` has no values; configure a constant imputation policy"
            ))
        })?;
        values
            .column_mut(WEATHER_START + k)
            .iter_mut()
            .zip(filled)
            .for_each(|(dst, v)| *dst = v);
    }

    Ok(FeatureMatrix {
        columns: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        values,
        target_column: TARGET_COLUMN.into(),
        timestamps: records.iter().map(|r| r.timestamp).collect(),
    })
}

/// hour, day-of-week (Monday = 0), day-of-month, day-of-year, month,
/// weekend flag.
fn calendar_features(ts: NaiveDateTime) -> [f64; 6] {
    let dow = ts.weekday().num_days_from_monday();
    [
        ts.hour() as f64,
        dow as f64,
        ts.day() as f64,
        ts.ordinal() as f64,
        ts.month() as f64,
        if dow >= 5 { 1.0 } else { 0.0 },
    ]
}

fn impute_channel(raw: &[Option<f64>], policy: ImputePolicy) -> Option<Vec<f64>> {
    match policy {
        ImputePolicy::Constant(c) => Some(raw.iter().map(|v| v.unwrap_or(c)).collect()),
        ImputePolicy::ForwardBackward => {
            let first = raw.iter().flatten().next().copied()?;
            let mut last = first;
            Some(
                raw.iter()
                    .map(|v| {
                        if let Some(x) = v {
                            last = *x;
                        }
                        last
                    })
                    .collect(),
            )
        }
    }
}
