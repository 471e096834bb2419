use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_input, check_output, dot, Predictor};
use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    /// Width of the single tanh hidden layer.
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            learning_rate: 1e-3,
            epochs: 300,
            seed: 0,
        }
    }
}

/// One tanh hidden layer, linear output, trained full-batch with Adam on the
/// mean squared error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpForecaster {
    /// W × D
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// h × W
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub config: MlpConfig,
    /// Training loss after each epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

pub fn fit_mlp(train: &WindowedDataset, cfg: &MlpConfig) -> Result<MlpForecaster> {
    MlpForecaster::fit_flat(train.flat_inputs(), train.targets.view(), cfg)
}

impl MlpForecaster {
    /// Glorot-uniform initialization from the configured seed.
    pub fn init(input_dim: usize, output_dim: usize, cfg: &MlpConfig) -> Result<Self> {
        if cfg.hidden == 0 {
            return Err(Error::Parameter("hidden width must be positive".into()));
        }
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::Parameter("input and output widths must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut glorot = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit))
        };
        let w1 = glorot(cfg.hidden, input_dim);
        let w2 = glorot(output_dim, cfg.hidden);
        Ok(Self {
            w1,
            b1: Array1::zeros(cfg.hidden),
            w2,
            b2: Array1::zeros(output_dim),
            config: cfg.clone(),
            loss_history: Vec::new(),
        })
    }

    pub fn fit_flat(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, cfg: &MlpConfig) -> Result<Self> {
        if cfg.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if !(cfg.learning_rate > 0.0) {
            return Err(Error::Parameter("learning rate must be positive".into()));
        }
        if x.nrows() == 0 || x.nrows() != y.nrows() {
            return Err(Error::Shape("MLP fit needs matching non-empty inputs and targets".into()));
        }
        let mut model = Self::init(x.ncols(), y.ncols(), cfg)?;
        let mut adam = Adam::new(&model);
        for epoch in 0..cfg.epochs {
            let (loss, grad) = model.loss_and_gradient(x, y);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            adam.step(&mut model, &grad, cfg.learning_rate);
            model.loss_history.push(loss);
        }
        let (final_loss, _) = model.loss_and_gradient(x, y);
        if !final_loss.is_finite() {
            return Err(Error::Divergence {
                epoch: cfg.epochs,
                loss: final_loss,
            });
        }
        Ok(model)
    }

    fn hidden(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = x.dot(&self.w1.t());
        z += &self.b1;
        z.mapv_inplace(f64::tanh);
        z
    }

    /// Mean squared error over all N·h outputs and its exact gradient.
    pub fn loss_and_gradient(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> (f64, MlpGradient) {
        let a = self.hidden(x);
        let mut out = a.dot(&self.w2.t());
        out += &self.b2;
        let resid = out - y;
        let count = resid.len() as f64;
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / count;

        let d_out = resid * (2.0 / count);
        let w2 = d_out.t().dot(&a);
        let b2 = d_out.sum_axis(Axis(0));
        let mut d_z = d_out.dot(&self.w2);
        Zip::from(&mut d_z).and(&a).for_each(|dz, &act| *dz *= 1.0 - act * act);
        let w1 = d_z.t().dot(&x);
        let b1 = d_z.sum_axis(Axis(0));
        (loss, MlpGradient { w1, b1, w2, b2 })
    }

    pub fn loss(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> f64 {
        self.loss_and_gradient(x, y).0
    }

    /// All parameters in the order w1, b1, w2, b2.
    pub fn parameters(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .copied()
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for p in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            *p = it.next().expect("parameter vector too short");
        }
    }
}

impl MlpGradient {
    pub fn flatten(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .copied()
            .collect()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &MlpForecaster) -> Self {
        let n = model.parameters().len();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpForecaster, grad: &MlpGradient, lr: f64) {
        self.t += 1;
        let g = grad.flatten();
        let mut params = model.parameters();
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
        model.set_parameters(&params);
    }
}

impl MlpForecaster {
    fn hidden_row(&self, row: &[f64], buf: &mut Vec<f64>) {
        buf.clear();
        for (k, w) in self.w1.outer_iter().enumerate() {
            buf.push((self.b1[k] + dot(row, w.as_slice().unwrap())).tanh());
        }
    }
}

impl Predictor for MlpForecaster {
    fn name(&self) -> &'static str {
        "mlp"
    }

    fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    fn output_dim(&self) -> usize {
        self.w2.nrows()
    }

    fn predict_flat(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input(self, &inputs)?;
        let h = self.output_dim();
        let mut out = Array2::zeros((inputs.nrows(), h));
        let mut hidden = Vec::with_capacity(self.b1.len());
        for (row, mut dst) in inputs.outer_iter().zip(out.outer_iter_mut()) {
            self.hidden_row(&row.to_vec(), &mut hidden);
            for j in 0..h {
                dst[j] = self.b2[j] + dot(&hidden, self.w2.row(j).as_slice().unwrap());
            }
        }
        Ok(out)
    }

    fn predict_output(&self, inputs: ArrayView2<'_, f64>, output: usize) -> Result<Array1<f64>> {
        check_input(self, &inputs)?;
        check_output(self, output)?;
        let w = self.w2.row(output);
        let w = w.as_slice().unwrap();
        let mut hidden = Vec::with_capacity(self.b1.len());
        Ok(inputs
            .outer_iter()
            .map(|row| {
                self.hidden_row(&row.to_vec(), &mut hidden);
                self.b2[output] + dot(&hidden, w)
            })
            .collect())
    }
}
