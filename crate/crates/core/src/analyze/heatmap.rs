use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CategorizedAttribution, Role};
use crate::error::{Error, Result};
use crate::explain::Method;

/// Plot-ready attribution grid: one row per feature, one column per time
/// step, rows sorted by their largest absolute attribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapData {
    pub method: Method,
    pub features: Vec<String>,
    /// Original column of each row in the feature order.
    pub feature_indices: Vec<usize>,
    pub time_steps: usize,
    pub grid: Vec<Vec<f64>>,
    pub roles: Vec<Vec<Role>>,
    /// Base value plus all attributions up to and including each step.
    pub cumulative: Vec<f64>,
    pub base_value: Vec<f64>,
    pub f_x: f64,
    pub actual: f64,
    pub predicted: f64,
}

pub fn heatmap_export(
    c: &CategorizedAttribution,
    window_length: usize,
    feature_names: &[String],
) -> Result<HeatmapData> {
    let f = feature_names.len();
    let a = &c.attribution;
    if window_length * f != a.phi.len() || c.roles.len() != a.phi.len() {
        return Err(Error::Shape(format!(
            "{} attributions do not form a {window_length}×{f} window",
            a.phi.len()
        )));
    }
    let at = |t: usize, j: usize| a.phi[t * f + j];
    let peak = |j: usize| (0..window_length).map(|t| at(t, j).abs()).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&p, &q| peak(q).total_cmp(&peak(p)).then(p.cmp(&q)));

    let mut cumulative = Vec::with_capacity(window_length);
    let mut running = a.phi0;
    for t in 0..window_length {
        running += (0..f).map(|j| at(t, j)).sum::<f64>();
        cumulative.push(running);
    }
    Ok(HeatmapData {
        method: a.method,
        features: order.iter().map(|&j| feature_names[j].clone()).collect(),
        grid: order.iter().map(|&j| (0..window_length).map(|t| at(t, j)).collect()).collect(),
        roles: order
            .iter()
            .map(|&j| (0..window_length).map(|t| c.roles[t * f + j]).collect())
            .collect(),
        feature_indices: order,
        time_steps: window_length,
        cumulative,
        base_value: vec![a.phi0; window_length],
        f_x: a.f_x,
        actual: c.actual,
        predicted: c.predicted,
    })
}

/// Grid as CSV: a `feature` column followed by one column per time step.
pub fn write_heatmap_csv<W: Write>(writer: W, h: &HeatmapData) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["feature".to_string()];
    header.extend((0..h.time_steps).map(|t| format!("t{t}")));
    w.write_record(&header)?;
    for (name, row) in h.features.iter().zip(&h.grid) {
        let mut record = vec![name.clone()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<heatmap writer>", e))?;
    Ok(())
}
