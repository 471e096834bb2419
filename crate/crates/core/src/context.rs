//! Context-aware background selection: global importances from a surrogate
//! forest, sharpened with `exp`, weight a cosine similarity that ranks
//! training windows against each anomaly. The K most similar windows become
//! the anomaly's explanation baseline. A uniform random selection is kept as
//! the comparator.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub raw: Vec<f64>,
    pub transformed: Vec<f64>,
}

pub fn transform_gfi(raw: &[f64]) -> Result<GlobalImportance> {
    if let Some((i, v)) = raw.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Input(format!(
            "importance {i} is {v}; importances must be non-negative"
        )));
    }
    Ok(GlobalImportance {
        raw: raw.to_vec(),
        transformed: raw.iter().map(|v| v.exp()).collect(),
    })
}

/// Which weighted-cosine variant to score with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityForm {
    /// Σ w·a·b / (√Σ w·a² · √Σ w·b²)
    #[default]
    Standard,
    /// Σ w·a·b / (√Σ (w·a)² · √Σ (w·b)²)
    SquaredWeight,
}

pub fn weighted_cosine(
    x_c: ArrayView1<'_, f64>,
    x_a: ArrayView1<'_, f64>,
    w: &[f64],
) -> Result<f64> {
    weighted_cosine_with(x_c, x_a, w, SimilarityForm::Standard)
}

pub fn weighted_cosine_with(
    x_c: ArrayView1<'_, f64>,
    x_a: ArrayView1<'_, f64>,
    w: &[f64],
    form: SimilarityForm,
) -> Result<f64> {
    if x_c.len() != x_a.len() || x_a.len() != w.len() {
        return Err(Error::Shape(format!(
            "similarity of vectors of length {} and {} with {} weights",
            x_c.len(),
            x_a.len(),
            w.len()
        )));
    }
    check_weights(w)?;
    let mut num = 0.0;
    let mut norm_c = 0.0;
    let mut norm_a = 0.0;
    for ((&c, &a), &wi) in x_c.iter().zip(x_a.iter()).zip(w) {
        num += wi * c * a;
        match form {
            SimilarityForm::Standard => {
                norm_c += wi * c * c;
                norm_a += wi * a * a;
            }
            SimilarityForm::SquaredWeight => {
                norm_c += (wi * c).powi(2);
                norm_a += (wi * a).powi(2);
            }
        }
    }
    if norm_c == 0.0 || norm_a == 0.0 {
        return Err(Error::UndefinedSimilarity(
            "one of the vectors has zero weighted norm".into(),
        ));
    }
    Ok(num / (norm_c.sqrt() * norm_a.sqrt()))
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Input("similarity weights must be positive and finite".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Similar,
    Random,
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Selection::Similar => "similar",
            Selection::Random => "random",
        })
    }
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "similar" => Ok(Selection::Similar),
            "random" => Ok(Selection::Random),
            other => Err(Error::Parameter(format!("unknown selection `{other}`"))),
        }
    }
}

/// K training windows used as the explanation baseline. Rows are copied
/// from the training matrix unmodified.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSet {
    pub samples: Array2<f64>,
    pub row_indices: Vec<usize>,
    /// Similarity of each selected row, non-increasing. `None` for random
    /// selection.
    pub scores: Option<Vec<f64>>,
    pub selection: Selection,
    pub seed: Option<u64>,
    pub anomaly_index: Option<usize>,
}

/// Serializable summary of a background set (no sample values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundExport {
    pub anomaly_index: Option<usize>,
    pub selection: Selection,
    pub k: usize,
    pub seed: Option<u64>,
    pub row_indices: Vec<usize>,
    pub scores: Option<Vec<f64>>,
}

impl BackgroundSet {
    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn with_anomaly(mut self, index: usize) -> Self {
        self.anomaly_index = Some(index);
        self
    }

    pub fn export(&self) -> BackgroundExport {
        BackgroundExport {
            anomaly_index: self.anomaly_index,
            selection: self.selection,
            k: self.len(),
            seed: self.seed,
            row_indices: self.row_indices.clone(),
            scores: self.scores.clone(),
        }
    }

    /// A background built from explicit rows, e.g. a singleton.
    pub fn from_rows(samples: Array2<f64>) -> Self {
        let n = samples.nrows();
        Self {
            samples,
            row_indices: (0..n).collect(),
            scores: None,
            selection: Selection::Random,
            seed: None,
            anomaly_index: None,
        }
    }
}

/// Scores every training row against the anomaly. Scores are fully
/// materialized in row order, so the result does not depend on how the work
/// is split across threads.
pub fn similarity_scores(
    x_a: ArrayView1<'_, f64>,
    train_flat: ArrayView2<'_, f64>,
    w: &[f64],
    form: SimilarityForm,
) -> Result<Vec<f64>> {
    let d = x_a.len();
    if train_flat.ncols() != d || w.len() != d {
        return Err(Error::Shape(format!(
            "anomaly of length {d}, training rows of length {}, {} weights",
            train_flat.ncols(),
            w.len()
        )));
    }
    check_weights(w)?;
    let (num_w, norm_w): (Vec<f64>, Vec<f64>) = match form {
        SimilarityForm::Standard => (w.to_vec(), w.to_vec()),
        SimilarityForm::SquaredWeight => (w.to_vec(), w.iter().map(|v| v * v).collect()),
    };
    let a_num: Vec<f64> = x_a.iter().zip(&num_w).map(|(a, w)| a * w).collect();
    let a_norm: f64 = x_a.iter().zip(&norm_w).map(|(a, w)| w * a * a).sum();
    if a_norm == 0.0 {
        return Err(Error::UndefinedSimilarity("anomaly window has zero weighted norm".into()));
    }
    let a_norm = a_norm.sqrt();

    (0..train_flat.nrows())
        .into_par_iter()
        .map(|r| {
            let row = train_flat.row(r);
            let mut num = 0.0f64;
            let mut norm = 0.0f64;
            for ((&c, &an), &nw) in row.iter().zip(&a_num).zip(&norm_w) {
                num += c * an;
                norm += nw * c * c;
            }
            if norm == 0.0 {
                return Err(Error::UndefinedSimilarity(format!(
                    "training row {r} has zero weighted norm"
                )));
            }
            Ok(num / (norm.sqrt() * a_norm))
        })
        .collect()
}

/// Indices of the K largest scores, best first; ties go to the lower index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let by_rank = |&a: &usize, &b: &usize| -> Ordering {
        scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
    };
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if k < idx.len() {
        if k > 0 {
            idx.select_nth_unstable_by(k - 1, by_rank);
        }
        idx.truncate(k);
    }
    idx.sort_by(by_rank);
    idx
}

pub fn select_background(
    x_a: ArrayView1<'_, f64>,
    train_flat: ArrayView2<'_, f64>,
    w: &[f64],
    k: usize,
) -> Result<BackgroundSet> {
    select_background_with(x_a, train_flat, w, k, SimilarityForm::Standard)
}

pub fn select_background_with(
    x_a: ArrayView1<'_, f64>,
    train_flat: ArrayView2<'_, f64>,
    w: &[f64],
    k: usize,
    form: SimilarityForm,
) -> Result<BackgroundSet> {
    check_k(train_flat.nrows(), k)?;
    let scores = similarity_scores(x_a, train_flat, w, form)?;
    let rows = top_k(&scores, k);
    Ok(BackgroundSet {
        samples: train_flat.select(Axis(0), &rows),
        scores: Some(rows.iter().map(|&r| scores[r]).collect()),
        row_indices: rows,
        selection: Selection::Similar,
        seed: None,
        anomaly_index: None,
    })
}

/// Uniform sample of K rows without replacement.
pub fn random_background(train_flat: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<BackgroundSet> {
    check_k(train_flat.nrows(), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = sample(&mut rng, train_flat.nrows(), k).into_vec();
    Ok(BackgroundSet {
        samples: train_flat.select(Axis(0), &rows),
        row_indices: rows,
        scores: None,
        selection: Selection::Random,
        seed: Some(seed),
        anomaly_index: None,
    })
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("background size K must be positive".into()));
    }
    if n < k {
        return Err(Error::Sizing(format!(
            "only {n} training rows for a background of {k}; choose a smaller K"
        )));
    }
    Ok(())
}
