use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;

use super::{Attribution, MaskedGame, Method, Scratch, EXACT_MAX_FEATURES};
use crate::error::{Error, Result};
use crate::predictor::Predictor;

/// Shapley values by evaluating all 2^F coalitions.
pub fn exact_shapley<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView1<'_, f64>,
    background: ArrayView2<'_, f64>,
    horizon: usize,
) -> Result<Attribution> {
    let d = x.len();
    if d > EXACT_MAX_FEATURES {
        return Err(Error::Budget(format!(
            "exact Shapley values over {d} features need 2^{d} coalitions; the limit is {EXACT_MAX_FEATURES} features"
        )));
    }
    let game = MaskedGame::new(model, x, background, horizon)?;
    let values: Vec<f64> = (0usize..1 << d)
        .into_par_iter()
        .map_init(
            || (Scratch::default(), vec![false; d]),
            |(buf, mask), bits| {
                for (i, m) in mask.iter_mut().enumerate() {
                    *m = bits >> i & 1 == 1;
                }
                game.value_with(mask, buf)
            },
        )
        .collect::<Result<_>>()?;

    // weight(s) = s! (F − s − 1)! / F! = 1 / (F · C(F − 1, s))
    let mut weights = vec![0.0; d];
    let mut binom = 1.0;
    for (s, w) in weights.iter_mut().enumerate() {
        *w = 1.0 / (d as f64 * binom);
        binom = binom * (d - 1 - s) as f64 / (s + 1) as f64;
    }
    let phi = (0..d)
        .map(|i| {
            (0usize..1 << d)
                .filter(|bits| bits >> i & 1 == 0)
                .map(|bits| weights[bits.count_ones() as usize] * (values[bits | 1 << i] - values[bits]))
                .sum()
        })
        .collect();

    Ok(Attribution {
        phi,
        phi0: values[0],
        f_x: values[(1 << d) - 1],
        method: Method::Exact,
        n_evals: game.evals(),
        seed: None,
        std_err: None,
        horizon,
    })
}
