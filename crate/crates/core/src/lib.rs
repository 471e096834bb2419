//! Residual-based anomaly detection for hourly energy-consumption series,
//! with Shapley-value explanations whose background set is chosen by
//! importance-weighted cosine similarity.

pub mod analyze;
pub mod anomaly;
pub mod context;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod pipeline;
pub mod predictor;
pub mod synth;

pub use error::{Error, Result};
