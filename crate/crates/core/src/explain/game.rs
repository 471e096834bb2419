use std::sync::atomic::{AtomicUsize, Ordering};

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::predictor::Predictor;

/// Reusable composite buffers for [`MaskedGame::value_with`].
#[derive(Default)]
pub struct Scratch {
    low: Option<Array2<f64>>,
    high: Option<Array2<f64>>,
}

/// Interventional value function: `v(S)` is the mean model output over the
/// background rows after overwriting the coalition's features with the
/// explained sample. Every model call is counted.
pub struct MaskedGame<'a, P: Predictor + ?Sized> {
    model: &'a P,
    x: ArrayView1<'a, f64>,
    background: ArrayView2<'a, f64>,
    output: usize,
    x_dense: Vec<f64>,
    background_dense: Array2<f64>,
    evals: AtomicUsize,
}

impl<'a, P: Predictor + ?Sized> MaskedGame<'a, P> {
    pub fn new<'x: 'a, 'b: 'a>(
        model: &'a P,
        x: ArrayView1<'x, f64>,
        background: ArrayView2<'b, f64>,
        output: usize,
    ) -> Result<Self> {
        if background.nrows() == 0 {
            return Err(Error::Input("background set is empty".into()));
        }
        let d = model.input_dim();
        if x.len() != d || background.ncols() != d {
            return Err(Error::Shape(format!(
                "sample of length {} and background of width {} for a model taking {d} inputs",
                x.len(),
                background.ncols()
            )));
        }
        if output >= model.output_dim() {
            return Err(Error::Shape(format!(
                "horizon {output} requested but the model has {}",
                model.output_dim()
            )));
        }
        Ok(Self {
            model,
            x: x.reborrow(),
            background: background.reborrow(),
            x_dense: x.to_vec(),
            background_dense: background.as_standard_layout().into_owned(),
            output,
            evals: AtomicUsize::new(0),
        })
    }

    pub fn n_features(&self) -> usize {
        self.x.len()
    }

    pub fn evals(&self) -> usize {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn x(&self) -> ArrayView1<'a, f64> {
        self.x
    }

    pub fn background(&self) -> ArrayView2<'a, f64> {
        self.background
    }

    fn call(&self, rows: ArrayView2<'_, f64>) -> Result<f64> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let out = self.model.predict_output(rows, self.output)?;
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Numerical("model returned a non-finite value during explanation".into()));
        }
        Ok(mean)
    }

    /// `v(∅)`: the mean prediction over the background.
    pub fn empty_value(&self) -> Result<f64> {
        self.call(self.background)
    }

    /// `v(full)`: the model output at the explained sample.
    pub fn full_value(&self) -> Result<f64> {
        self.call(self.x.insert_axis(ndarray::Axis(0)))
    }

    /// A background copy, the composite for the empty coalition.
    pub fn empty_composite(&self) -> Array2<f64> {
        self.background.to_owned()
    }

    /// Moves feature `i` into the coalition of an existing composite.
    pub fn include(&self, composite: &mut Array2<f64>, i: usize) {
        composite.column_mut(i).fill(self.x[i]);
    }

    /// Evaluates a prepared composite batch.
    pub fn evaluate(&self, composite: &Array2<f64>) -> Result<f64> {
        self.call(composite.view())
    }

    /// `v(S)` for a membership mask. `scratch` keeps two composites between
    /// calls, one resting at the background and one at the sample, so only
    /// the smaller side of the coalition is written and then restored.
    pub fn value_with(&self, mask: &[bool], scratch: &mut Scratch) -> Result<f64> {
        let d = self.n_features();
        debug_assert_eq!(mask.len(), d);
        let members = mask.iter().filter(|&&m| m).count();
        if members == d {
            return self.full_value();
        }
        if members == 0 {
            return self.empty_value();
        }
        if 2 * members <= d {
            let buf = scratch.low.get_or_insert_with(|| self.background_dense.clone());
            let inside: Vec<usize> = (0..d).filter(|&i| mask[i]).collect();
            self.scatter(buf, &inside, Source::Sample);
            let value = self.call(buf.view());
            self.scatter(buf, &inside, Source::Background);
            value
        } else {
            let buf = scratch.high.get_or_insert_with(|| {
                let mut b = Array2::zeros(self.background.dim());
                b.rows_mut().into_iter().for_each(|mut r| r.assign(&self.x));
                b
            });
            let outside: Vec<usize> = (0..d).filter(|&i| !mask[i]).collect();
            self.scatter(buf, &outside, Source::Background);
            let value = self.call(buf.view());
            self.scatter(buf, &outside, Source::Sample);
            value
        }
    }

    /// Writes the chosen source into the listed columns of every row.
    fn scatter(&self, buf: &mut Array2<f64>, columns: &[usize], source: Source) {
        let d = self.n_features();
        let rows = buf.as_slice_mut().expect("composites are row-major").chunks_exact_mut(d);
        match source {
            Source::Sample => {
                for row in rows {
                    for &i in columns {
                        row[i] = self.x_dense[i];
                    }
                }
            }
            Source::Background => {
                let bg = self.background_dense.as_slice().expect("row-major copy");
                for (row, b) in rows.zip(bg.chunks_exact(d)) {
                    for &i in columns {
                        row[i] = b[i];
                    }
                }
            }
        }
    }

    pub fn value(&self, mask: &[bool]) -> Result<f64> {
        self.value_with(mask, &mut Scratch::default())
    }
}

#[derive(Clone, Copy)]
enum Source {
    Sample,
    Background,
}
