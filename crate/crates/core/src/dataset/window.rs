use chrono::NaiveDateTime;
use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3};

use super::features::FeatureMatrix;
use crate::error::{Error, Result};

/// Sliding windows of I steps × F features with the next h energy values as
/// targets. Stride is one row.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// N × I × F.
    pub inputs: Array3<f64>,
    /// N × h.
    pub targets: Array2<f64>,
    pub window_length: usize,
    pub horizon: usize,
    /// Row of the source matrix where each window starts.
    pub origin_indices: Vec<usize>,
    /// Timestamp of the first-horizon target of each window.
    pub target_timestamps: Vec<NaiveDateTime>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len_of(ndarray::Axis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.inputs.len_of(ndarray::Axis(2))
    }

    pub fn flat_dim(&self) -> usize {
        self.window_length * self.n_features()
    }

    /// N × (I·F) view, row-major by time step then feature.
    pub fn flat_inputs(&self) -> ArrayView2<'_, f64> {
        let n = self.len();
        let d = self.flat_dim();
        // `inputs` is always built in standard layout
        self.inputs
            .view()
            .into_shape_with_order((n, d))
            .expect("windowed inputs are contiguous")
    }

    pub fn targets_at(&self, horizon_index: usize) -> ArrayView1<'_, f64> {
        self.targets.column(horizon_index)
    }

    pub fn window(&self, n: usize) -> ArrayView2<'_, f64> {
        self.inputs.slice(s![n, .., ..])
    }
}

pub fn make_windows(m: &FeatureMatrix, window_length: usize, horizon: usize) -> Result<WindowedDataset> {
    if window_length == 0 || horizon == 0 {
        return Err(Error::Parameter(format!(
            "window length and horizon must be positive, got I={window_length}, h={horizon}"
        )));
    }
    let t = m.len();
    if t < window_length + horizon {
        return Err(Error::Sizing(format!(
            "{t} rows cannot form a window of {window_length} inputs and {horizon} targets"
        )));
    }
    let n = t - window_length - horizon + 1;
    let f = m.n_features();
    let target = m.target_index();
    let mut inputs = Array3::<f64>::zeros((n, window_length, f));
    let mut targets = Array2::<f64>::zeros((n, horizon));
    for i in 0..n {
        inputs
            .slice_mut(s![i, .., ..])
            .assign(&m.values.slice(s![i..i + window_length, ..]));
        targets
            .row_mut(i)
            .assign(&m.values.slice(s![i + window_length..i + window_length + horizon, target]));
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        window_length,
        horizon,
        origin_indices: (0..n).collect(),
        target_timestamps: (0..n).map(|i| m.timestamps[i + window_length]).collect(),
    })
}

/// Element (t, f) lands at index t·F + f.
pub fn flatten_window(w: ArrayView2<'_, f64>) -> Array1<f64> {
    w.iter().copied().collect()
}

pub fn unflatten(v: ArrayView1<'_, f64>, window_length: usize, n_features: usize) -> Result<Array2<f64>> {
    if n_features == 0 || v.len() % n_features != 0 || v.len() / n_features != window_length {
        return Err(Error::Shape(format!(
            "vector of length {} cannot be reshaped to {window_length}×{n_features}",
            v.len()
        )));
    }
    Ok(Array2::from_shape_vec((window_length, n_features), v.to_vec()).expect("length checked"))
}

/// Batched form of [`flatten_window`] for an N × I × F array.
pub fn flatten_batch(inputs: ArrayView3<'_, f64>) -> Array2<f64> {
    let (n, i, f) = inputs.dim();
    Array2::from_shape_vec((n, i * f), inputs.iter().copied().collect()).expect("sizes agree")
}
