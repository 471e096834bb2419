use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

/// Point-forecast accuracy. MAPE and SMAPE are percentages; MAPE skips
/// zero actuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub smape: f64,
    pub mape: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub all_horizons: ForecastMetrics,
    pub first_horizon: ForecastMetrics,
}

impl HorizonMetrics {
    pub fn compute(actual: ArrayView2<'_, f64>, predicted: ArrayView2<'_, f64>) -> Self {
        let a: Vec<f64> = actual.iter().copied().collect();
        let p: Vec<f64> = predicted.iter().copied().collect();
        Self {
            all_horizons: ForecastMetrics::from_slices(&a, &p),
            first_horizon: ForecastMetrics::compute(actual.column(0), predicted.column(0)),
        }
    }
}

impl ForecastMetrics {
    pub fn compute(actual: ArrayView1<'_, f64>, predicted: ArrayView1<'_, f64>) -> Self {
        Self::from_slices(&actual.to_vec(), &predicted.to_vec())
    }

    pub fn from_slices(actual: &[f64], predicted: &[f64]) -> Self {
        assert_eq!(actual.len(), predicted.len());
        let n = actual.len() as f64;
        let mean = actual.iter().sum::<f64>() / n;
        let mut sse = 0.0;
        let mut sae = 0.0;
        let mut sst = 0.0;
        let mut smape = 0.0;
        let mut mape = 0.0;
        let mut mape_n = 0usize;
        for (&a, &p) in actual.iter().zip(predicted) {
            let e = a - p;
            sse += e * e;
            sae += e.abs();
            sst += (a - mean).powi(2);
            let denom = a.abs() + p.abs();
            if denom > 0.0 {
                smape += 2.0 * e.abs() / denom;
            }
            if a != 0.0 {
                mape += (e / a).abs();
                mape_n += 1;
            }
        }
        let mse = sse / n;
        Self {
            mse,
            rmse: mse.sqrt(),
            mae: sae / n,
            smape: 100.0 * smape / n,
            mape: if mape_n > 0 { 100.0 * mape / mape_n as f64 } else { f64::NAN },
            r2: if sst > 0.0 { 1.0 - sse / sst } else { f64::NAN },
        }
    }
}
