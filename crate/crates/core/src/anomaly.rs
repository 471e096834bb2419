//! Prediction-error anomaly detection with an interquartile-range threshold
//! fitted on training errors.

use std::io::Write;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};
use crate::predictor::Predictor;

/// First-horizon residual of one window, `e = actual − predicted`, in scaled
/// units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionError {
    pub window_index: usize,
    pub timestamp: Option<NaiveDateTime>,
    pub predicted: f64,
    pub actual: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyThreshold {
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Anomalous,
    ProbablyNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRecord {
    pub window_index: usize,
    pub timestamp: Option<NaiveDateTime>,
    pub predicted: f64,
    pub actual: f64,
    pub e: f64,
    pub verdict: Verdict,
}

impl AnomalyRecord {
    pub fn is_anomalous(&self) -> bool {
        self.verdict == Verdict::Anomalous
    }
}

pub fn compute_errors<P: Predictor + ?Sized>(model: &P, ds: &WindowedDataset) -> Result<Vec<PredictionError>> {
    if ds.is_empty() {
        return Err(Error::Input("no windows to score".into()));
    }
    let predicted = model.predict_output(ds.flat_inputs(), 0)?;
    let actual = ds.targets_at(0);
    predicted
        .iter()
        .zip(actual.iter())
        .enumerate()
        .map(|(n, (&p, &a))| {
            if !p.is_finite() {
                return Err(Error::NonFinitePrediction { window: n });
            }
            Ok(PredictionError {
                window_index: n,
                timestamp: ds.target_timestamps.get(n).copied(),
                predicted: p,
                actual: a,
                e: a - p,
            })
        })
        .collect()
}

/// Quantile by linear interpolation between order statistics of a sorted
/// slice (position (n − 1)·q).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn fit_threshold(train_errors: &[PredictionError]) -> Result<AnomalyThreshold> {
    let values: Vec<f64> = train_errors.iter().map(|e| e.e).collect();
    threshold_from_values(&values)
}

pub fn threshold_from_values(values: &[f64]) -> Result<AnomalyThreshold> {
    if values.len() < 4 {
        return Err(Error::Sizing(format!(
            "an IQR threshold needs at least 4 errors, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("prediction errors must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    Ok(AnomalyThreshold {
        q1,
        q3,
        iqr,
        lower: q1 - 1.5 * iqr,
        upper: q3 + 1.5 * iqr,
    })
}

impl AnomalyThreshold {
    /// Bounds are inclusive: an error exactly on a bound is normal.
    pub fn verdict(&self, e: f64) -> Verdict {
        if e < self.lower || e > self.upper {
            Verdict::Anomalous
        } else {
            Verdict::ProbablyNormal
        }
    }
}

pub fn classify(errors: &[PredictionError], th: &AnomalyThreshold) -> Vec<AnomalyRecord> {
    errors
        .iter()
        .map(|e| AnomalyRecord {
            window_index: e.window_index,
            timestamp: e.timestamp,
            predicted: e.predicted,
            actual: e.actual,
            e: e.e,
            verdict: th.verdict(e.e),
        })
        .collect()
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(mut writer: W, records: &[AnomalyRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<jsonl writer>", e))?;
    }
    Ok(())
}
