//! Permutation-walk estimators. Each walk adds features one at a time in a
//! random order and credits every feature with the change in value it
//! caused. The contributions of one walk telescope to `f(x) − v(∅)`.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Attribution, ExplainerConfig, MaskedGame, Method};
use crate::error::{Error, Result};
use crate::predictor::Predictor;

fn permutations(d: usize, n: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut order: Vec<usize> = (0..d).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect()
}

fn walk<P: Predictor + ?Sized>(
    game: &MaskedGame<'_, P>,
    order: impl Iterator<Item = usize>,
    empty: f64,
    full: f64,
) -> Result<Vec<f64>> {
    let d = game.n_features();
    let mut composite = game.empty_composite();
    let mut contributions = vec![0.0; d];
    let mut previous = empty;
    for (step, i) in order.enumerate() {
        game.include(&mut composite, i);
        let current = if step + 1 == d { full } else { game.evaluate(&composite)? };
        contributions[i] = current - previous;
        previous = current;
    }
    Ok(contributions)
}

/// Per-feature mean and standard error of the mean over samples.
fn summarize(samples: &[Vec<f64>], d: usize) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = samples.len() as f64;
    let mean: Vec<f64> = (0..d).map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / n).collect();
    let se = (samples.len() > 1).then(|| {
        (0..d)
            .map(|i| {
                let ss: f64 = samples.iter().map(|s| (s[i] - mean[i]).powi(2)).sum();
                (ss / (n - 1.0) / n).sqrt()
            })
            .collect()
    });
    (mean, se)
}

fn check_budget(cfg: &ExplainerConfig) -> Result<()> {
    if cfg.n_samples == 0 {
        return Err(Error::Parameter("at least one permutation is required".into()));
    }
    Ok(())
}

/// Monte-Carlo Shapley estimate from `n_samples` random permutations.
pub fn sampling_shap<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView1<'_, f64>,
    background: ArrayView2<'_, f64>,
    cfg: &ExplainerConfig,
) -> Result<Attribution> {
    check_budget(cfg)?;
    let game = MaskedGame::new(model, x, background, cfg.horizon)?;
    let d = game.n_features();
    let phi0 = game.empty_value()?;
    let f_x = game.full_value()?;
    let samples: Vec<Vec<f64>> = permutations(d, cfg.n_samples, cfg.seed)
        .par_iter()
        .map(|order| walk(&game, order.iter().copied(), phi0, f_x))
        .collect::<Result<_>>()?;
    let (phi, std_err) = summarize(&samples, d);
    Ok(Attribution {
        phi,
        phi0,
        f_x,
        method: Method::Sampling,
        n_evals: game.evals(),
        seed: Some(cfg.seed),
        std_err,
        horizon: cfg.horizon,
    })
}

/// Antithetic variant: every permutation is walked forwards and backwards
/// and the two walks are averaged. `n_samples` counts pairs.
pub fn permutation_shap<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView1<'_, f64>,
    background: ArrayView2<'_, f64>,
    cfg: &ExplainerConfig,
) -> Result<Attribution> {
    check_budget(cfg)?;
    let game = MaskedGame::new(model, x, background, cfg.horizon)?;
    let d = game.n_features();
    let phi0 = game.empty_value()?;
    let f_x = game.full_value()?;
    let samples: Vec<Vec<f64>> = permutations(d, cfg.n_samples, cfg.seed)
        .par_iter()
        .map(|order| {
            let forward = walk(&game, order.iter().copied(), phi0, f_x)?;
            let backward = walk(&game, order.iter().rev().copied(), phi0, f_x)?;
            Ok(forward.iter().zip(&backward).map(|(a, b)| 0.5 * (a + b)).collect())
        })
        .collect::<Result<_>>()?;
    let (phi, std_err) = summarize(&samples, d);
    Ok(Attribution {
        phi,
        phi0,
        f_x,
        method: Method::Permutation,
        n_evals: game.evals(),
        seed: Some(cfg.seed),
        std_err,
        horizon: cfg.horizon,
    })
}
