use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_input, check_output, dot, Predictor};
use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};

/// Linear forecaster on the flattened window with an unpenalized intercept,
/// fitted in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeForecaster {
    /// h × (I·F); row `j` holds the weights of horizon `j`.
    pub coef: Array2<f64>,
    pub intercept: Array1<f64>,
    pub l2_lambda: f64,
}

pub fn fit_ridge(train: &WindowedDataset, l2_lambda: f64) -> Result<RidgeForecaster> {
    RidgeForecaster::fit_flat(train.flat_inputs(), train.targets.view(), l2_lambda)
}

impl RidgeForecaster {
    /// Minimizes ‖Y − XW − 1bᵀ‖² + λ‖W‖² by centering and solving the normal
    /// equations with a Cholesky factorization.
    pub fn fit_flat(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, l2_lambda: f64) -> Result<Self> {
        if !(l2_lambda >= 0.0) {
            return Err(Error::Parameter(format!("l2_lambda must be ≥ 0, got {l2_lambda}")));
        }
        let (n, d) = x.dim();
        if n == 0 || y.nrows() != n {
            return Err(Error::Shape(format!(
                "ridge fit needs matching non-empty inputs and targets, got {n} and {}",
                y.nrows()
            )));
        }
        let h = y.ncols();
        let x_mean = x.mean_axis(Axis(0)).expect("n > 0");
        let y_mean = y.mean_axis(Axis(0)).expect("n > 0");

        let xc = &x - &x_mean;
        let yc = &y - &y_mean;
        let gram_nd = xc.t().dot(&xc);
        let mut gram = DMatrix::from_fn(d, d, |i, j| gram_nd[[i, j]]);
        let scale = (0..d).map(|j| gram[(j, j)]).fold(0.0f64, f64::max);
        for j in 0..d {
            gram[(j, j)] += l2_lambda;
        }
        let rhs_nd = xc.t().dot(&yc);
        let rhs = DMatrix::from_fn(d, h, |i, j| rhs_nd[[i, j]]);

        let chol = gram.cholesky().ok_or_else(singular)?;
        let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if min_pivot * min_pivot <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(singular());
        }
        let w = chol.solve(&rhs); // d × h

        let coef = Array2::from_shape_fn((h, d), |(j, k)| w[(k, j)]);
        let intercept = Array1::from_shape_fn(h, |j| y_mean[j] - dot(coef.row(j).as_slice().unwrap(), x_mean.as_slice().unwrap()));
        Ok(Self {
            coef,
            intercept,
            l2_lambda,
        })
    }
}

fn singular() -> Error {
    Error::Numerical(
        "normal equations are singular; use a positive l2_lambda to regularize".into(),
    )
}

impl Predictor for RidgeForecaster {
    fn name(&self) -> &'static str {
        "ridge"
    }

    fn input_dim(&self) -> usize {
        self.coef.ncols()
    }

    fn output_dim(&self) -> usize {
        self.coef.nrows()
    }

    fn predict_flat(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input(self, &inputs)?;
        let h = self.output_dim();
        let mut out = Array2::zeros((inputs.nrows(), h));
        for (row, mut dst) in inputs.outer_iter().zip(out.outer_iter_mut()) {
            let row = row.to_vec();
            for j in 0..h {
                dst[j] = self.intercept[j] + dot(&row, self.coef.row(j).as_slice().unwrap());
            }
        }
        Ok(out)
    }

    fn predict_output(&self, inputs: ArrayView2<'_, f64>, output: usize) -> Result<Array1<f64>> {
        check_input(self, &inputs)?;
        check_output(self, output)?;
        let w = self.coef.row(output);
        let w = w.as_slice().expect("coef rows are contiguous");
        let b = self.intercept[output];
        Ok(match inputs.as_slice() {
            Some(flat) if inputs.ncols() > 0 => flat
                .chunks_exact(inputs.ncols())
                .map(|row| b + dot(row, w))
                .collect(),
            _ => inputs.outer_iter().map(|row| b + dot(&row.to_vec(), w)).collect(),
        })
    }
}
