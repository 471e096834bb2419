use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use crate::error::{Error, Result};

/// Per-feature min-max parameters. The default value is unfitted and cannot
/// be applied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    pub fn is_fitted(&self) -> bool {
        !self.min.is_empty() && self.min.len() == self.max.len()
    }

    /// Scales a single value of feature `j`. A constant-range feature maps
    /// to 0.
    pub fn scale(&self, j: usize, x: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            (x - self.min[j]) / range
        } else {
            0.0
        }
    }

    pub fn unscale(&self, j: usize, x: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            x * range + self.min[j]
        } else {
            self.min[j]
        }
    }

    fn check(&self, m: &FeatureMatrix) -> Result<()> {
        if !self.is_fitted() {
            return Err(Error::State("scaling parameters have not been fitted".into()));
        }
        if self.min.len() != m.n_features() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} features, matrix has {}",
                self.min.len(),
                m.n_features()
            )));
        }
        Ok(())
    }
}

pub fn fit_scaler(train: &FeatureMatrix) -> Result<ScalingParams> {
    if train.is_empty() {
        return Err(Error::Input("cannot fit a scaler on an empty matrix".into()));
    }
    let (min, max) = train
        .values
        .columns()
        .into_iter()
        .map(|c| {
            c.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
        })
        .unzip();
    Ok(ScalingParams { min, max })
}

pub fn apply_scaler(m: &FeatureMatrix, p: &ScalingParams) -> Result<FeatureMatrix> {
    p.check(m)?;
    let mut out = m.clone();
    for (j, mut col) in out.values.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|x| p.scale(j, x));
    }
    Ok(out)
}

pub fn invert_scaler(m: &FeatureMatrix, p: &ScalingParams) -> Result<FeatureMatrix> {
    p.check(m)?;
    let mut out = m.clone();
    for (j, mut col) in out.values.columns_mut().into_iter().enumerate() {
        Zip::from(&mut col).for_each(|x| *x = p.unscale(j, *x));
    }
    Ok(out)
}
