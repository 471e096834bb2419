use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView1, ArrayView2};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Attribution, ExplainerConfig, MaskedGame, Method, Scratch};
use crate::error::{Error, Result};
use crate::predictor::Predictor;

/// Smallest squared Cholesky pivot, relative to the largest diagonal entry,
/// accepted as full rank.
const PIVOT_TOLERANCE: f64 = 1e-10;

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln()).sum()
}

/// Shapley kernel `(F − 1) / (C(F, s) · s · (F − s))`.
pub fn kernel_weight(n_features: usize, size: usize) -> Result<f64> {
    if size == 0 || size >= n_features {
        return Err(Error::Numerical(format!(
            "coalition of size {size} out of {n_features} has infinite kernel weight"
        )));
    }
    let f = n_features as f64;
    let s = size as f64;
    Ok((f - 1.0) / (ln_binomial(n_features, size).exp() * s * (f - s)))
}

struct Coalition {
    mask: Vec<bool>,
    weight: f64,
}

fn enumerate(d: usize) -> Result<Vec<Coalition>> {
    let weights: Vec<f64> = (0..=d)
        .map(|s| if s == 0 || s == d { Ok(0.0) } else { kernel_weight(d, s) })
        .collect::<Result<_>>()?;
    Ok((1u64..(1u64 << d) - 1)
        .map(|bits| {
            let mask: Vec<bool> = (0..d).map(|i| bits >> i & 1 == 1).collect();
            let size = bits.count_ones() as usize;
            Coalition { mask, weight: weights[size] }
        })
        .collect())
}

/// Draws coalition sizes in proportion to their total kernel weight and
/// members uniformly within a size, pairing each draw with its complement.
/// Under this design the regression weights are uniform.
fn sample_pairs(d: usize, n_samples: usize, seed: u64) -> Vec<Coalition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size_weights: Vec<f64> = (1..d).map(|s| 1.0 / (s as f64 * (d - s) as f64)).collect();
    let sizes = WeightedIndex::new(&size_weights).expect("positive size weights");
    let pairs = n_samples.div_ceil(2);
    let mut out = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let size = sizes.sample(&mut rng) + 1;
        let mut mask = vec![false; d];
        for i in sample(&mut rng, d, size) {
            mask[i] = true;
        }
        let complement = mask.iter().map(|m| !m).collect();
        out.push(Coalition { mask, weight: 1.0 });
        out.push(Coalition { mask: complement, weight: 1.0 });
    }
    out
}

/// Accumulates `Σ w z zᵀ` and `Σ w y z` for binary rows. Rows with more than
/// half the features present are accumulated through their complement so
/// the cost per row is quadratic in the smaller side only.
struct Gram {
    d: usize,
    g: Vec<f64>,
    b: Vec<f64>,
    big_weight: f64,
    big_target: f64,
    big_complement: Vec<f64>,
}

impl Gram {
    fn new(d: usize) -> Self {
        Self {
            d,
            g: vec![0.0; d * d],
            b: vec![0.0; d],
            big_weight: 0.0,
            big_target: 0.0,
            big_complement: vec![0.0; d],
        }
    }

    fn add(&mut self, mask: &[bool], w: f64, y: f64) {
        let d = self.d;
        let members = mask.iter().filter(|&&m| m).count();
        let flip = 2 * members > d;
        let side: Vec<usize> = (0..d).filter(|&i| mask[i] != flip).collect();
        for &i in &side {
            for &j in &side {
                self.g[i * d + j] += w;
            }
        }
        if flip {
            // z zᵀ = 1 1ᵀ − 1 cᵀ − c 1ᵀ + c cᵀ and y z = y 1 − y c
            self.big_weight += w;
            self.big_target += w * y;
            for &i in &side {
                self.big_complement[i] += w;
                self.b[i] -= w * y;
            }
        } else {
            for &i in &side {
                self.b[i] += w * y;
            }
        }
    }

    fn finish(mut self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d;
        for i in 0..d {
            self.b[i] += self.big_target;
            for j in 0..d {
                self.g[i * d + j] += self.big_weight - self.big_complement[i] - self.big_complement[j];
            }
        }
        (self.g, self.b)
    }
}

pub fn kernel_shap<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView1<'_, f64>,
    background: ArrayView2<'_, f64>,
    cfg: &ExplainerConfig,
) -> Result<Attribution> {
    let game = MaskedGame::new(model, x, background, cfg.horizon)?;
    let d = game.n_features();
    if d < 2 {
        return Err(Error::Parameter("kernel SHAP needs at least two features".into()));
    }
    let enumerated = d <= cfg.enumerate_threshold;
    if !enumerated && cfg.n_samples < 2 * d {
        return Err(Error::Budget(format!(
            "{} coalitions for {d} features; use at least {}",
            cfg.n_samples,
            2 * d
        )));
    }
    let coalitions = if enumerated {
        enumerate(d)?
    } else {
        sample_pairs(d, cfg.n_samples, cfg.seed)
    };

    let phi0 = game.empty_value()?;
    let f_x = game.full_value()?;
    let values: Vec<f64> = coalitions
        .par_iter()
        .map_init(Scratch::default, |scratch, c| game.value_with(&c.mask, scratch))
        .collect::<Result<_>>()?;

    // φ0 is pinned and the last feature absorbs the efficiency constraint:
    // φ_last = Δ − Σ_{i<last} φ_i.
    let delta = f_x - phi0;
    let last = d - 1;
    let mut gram = Gram::new(d);
    for (c, v) in coalitions.iter().zip(&values) {
        let y = v - phi0 - if c.mask[last] { delta } else { 0.0 };
        gram.add(&c.mask, c.weight, y);
    }
    let (g, b) = gram.finish();
    let reduced = DMatrix::from_fn(last, last, |i, j| {
        g[i * d + j] - g[i * d + last] - g[last * d + j] + g[last * d + last]
    });
    let rhs = DVector::from_fn(last, |i, _| b[i] - b[last]);
    let scale = reduced.diagonal().max();
    let solved = reduced
        .cholesky()
        .filter(|ch| ch.l_dirty().diagonal().iter().all(|p| p * p > PIVOT_TOLERANCE * scale))
        .map(|ch| ch.solve(&rhs))
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| {
            Error::Numerical(format!(
                "kernel SHAP design with {} coalitions is rank deficient; increase n_samples",
                coalitions.len()
            ))
        })?;

    let mut phi: Vec<f64> = solved.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Ok(Attribution {
        phi,
        phi0,
        f_x,
        method: Method::Kernel,
        n_evals: game.evals(),
        seed: (!enumerated).then_some(cfg.seed),
        std_err: None,
        horizon: cfg.horizon,
    })
}
