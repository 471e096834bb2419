use std::io::Write;

use log::{info, warn};
use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{bartlett_test, reduction_pct, variability_with, BartlettResult, Variability};
use super::reconstruct_prediction;
use crate::context::{random_background, select_background_with, BackgroundSet, Selection, SimilarityForm};
use crate::error::{Error, Result};
use crate::explain::{explain, Attribution, ExplainerConfig, Method};
use crate::predictor::Predictor;

/// Whether variability is measured on signed attributions or magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    #[default]
    Signed,
    Absolute,
}

impl Magnitude {
    pub fn apply(self, phi: f64) -> f64 {
        match self {
            Magnitude::Signed => phi,
            Magnitude::Absolute => phi.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub k: usize,
    pub methods: Vec<Method>,
    pub kernel_coalitions: usize,
    pub sampling_permutations: usize,
    pub permutation_pairs: usize,
    pub enumerate_threshold: usize,
    pub background_seed: u64,
    pub explainer_seed: u64,
    pub similarity: SimilarityForm,
    pub horizon: usize,
    pub min_anomalies: usize,
    /// How many anomalies the across-rerun mode re-explains.
    pub rerun_anomalies: usize,
    /// Reruns per anomaly in the across-rerun mode; below 2 disables it.
    pub reruns: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            k: crate::context::DEFAULT_K,
            methods: Method::SAMPLED.to_vec(),
            kernel_coalitions: 4096,
            sampling_permutations: 8,
            permutation_pairs: 4,
            enumerate_threshold: 13,
            background_seed: 0,
            explainer_seed: 0,
            similarity: SimilarityForm::Standard,
            horizon: 0,
            min_anomalies: 10,
            rerun_anomalies: 2,
            reruns: 3,
        }
    }
}

impl BenchmarkConfig {
    pub fn budget(&self, method: Method) -> usize {
        match method {
            Method::Kernel => self.kernel_coalitions,
            Method::Sampling => self.sampling_permutations,
            Method::Permutation => self.permutation_pairs,
            Method::Exact => 0,
        }
    }

    fn explainer(&self, method: Method, seed: u64) -> ExplainerConfig {
        ExplainerConfig {
            n_samples: self.budget(method),
            seed,
            enumerate_threshold: self.enumerate_threshold,
            horizon: self.horizon,
        }
    }
}

/// Seed for anomaly `ordinal` on run `run`; run 0 is the primary pass.
fn derive_seed(base: u64, ordinal: usize, run: usize) -> u64 {
    base.wrapping_add(1_000_003u64.wrapping_mul(ordinal as u64))
        .wrapping_add(run as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariabilitySummary {
    pub mean: f64,
    pub sd: f64,
}

impl From<&Variability> for VariabilitySummary {
    fn from(v: &Variability) -> Self {
        Self { mean: v.mean, sd: v.sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub method: Method,
    pub selection: Selection,
    /// Across-anomaly variability of signed attributions.
    pub across_anomalies: VariabilitySummary,
    pub across_anomalies_absolute: VariabilitySummary,
    /// Mean over re-explained anomalies of the across-rerun variability.
    pub across_reruns: Option<VariabilitySummary>,
    pub per_feature_sd: Vec<f64>,
    pub model_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub method: Method,
    pub reduction_pct: f64,
    pub reduction_pct_absolute: f64,
    pub reduction_pct_reruns: Option<f64>,
    /// Between the two selections' per-feature SD vectors.
    pub bartlett_feature_sd: Option<BartlettResult>,
    /// Between all raw attribution values of the two selections.
    pub bartlett_pooled: Option<BartlettResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMetadata {
    pub config: BenchmarkConfig,
    pub n_anomalies: usize,
    pub anomaly_ids: Vec<usize>,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub metadata: BenchmarkMetadata,
    pub selections: Vec<SelectionSummary>,
    pub comparisons: Vec<MethodComparison>,
    /// Mean of the signed across-anomaly reductions over methods.
    pub mean_reduction_pct: f64,
}

impl StabilityReport {
    pub fn selection(&self, method: Method, selection: Selection) -> Option<&SelectionSummary> {
        self.selections
            .iter()
            .find(|s| s.method == method && s.selection == selection)
    }

    pub fn comparison(&self, method: Method) -> Option<&MethodComparison> {
        self.comparisons.iter().find(|c| c.method == method)
    }
}

/// Explains every anomaly under both background selections with each
/// method and compares the resulting variability.
pub fn stability_benchmark<P: Predictor + ?Sized>(
    model: &P,
    train_flat: ArrayView2<'_, f64>,
    anomalies: ArrayView2<'_, f64>,
    anomaly_ids: &[usize],
    weights: &[f64],
    cfg: &BenchmarkConfig,
) -> Result<StabilityReport> {
    stability_from_backgrounds(model, anomalies, anomaly_ids, cfg, |selection, x, seed| match selection {
        Selection::Similar => select_background_with(x, train_flat, weights, cfg.k, cfg.similarity),
        Selection::Random => random_background(train_flat, cfg.k, seed),
    })
}

/// As [`stability_benchmark`], with backgrounds supplied by `background`,
/// which receives the selection, the anomaly window and a derived seed.
pub fn stability_from_backgrounds<P, B>(
    model: &P,
    anomalies: ArrayView2<'_, f64>,
    anomaly_ids: &[usize],
    cfg: &BenchmarkConfig,
    background: B,
) -> Result<StabilityReport>
where
    P: Predictor + ?Sized,
    B: Fn(Selection, ArrayView1<'_, f64>, u64) -> Result<BackgroundSet> + Sync,
{
    let n = anomalies.nrows();
    if n != anomaly_ids.len() {
        return Err(Error::Shape(format!("{n} anomaly windows but {} ids", anomaly_ids.len())));
    }
    if n < cfg.min_anomalies.max(2) {
        return Err(Error::Sizing(format!(
            "the stability benchmark needs at least {} anomalies, got {n}",
            cfg.min_anomalies.max(2)
        )));
    }
    if cfg.methods.is_empty() {
        return Err(Error::Parameter("no explanation methods configured".into()));
    }

    let run = |method: Method, selection: Selection, ordinal: usize, rerun: usize| -> Result<Attribution> {
        let x = anomalies.row(ordinal);
        let bg = background(selection, x, derive_seed(cfg.background_seed, ordinal, rerun))?;
        let ecfg = cfg.explainer(method, derive_seed(cfg.explainer_seed, ordinal, rerun));
        let a = explain(method, model, x, bg.samples.view(), &ecfg)?;
        reconstruct_prediction(&a)?;
        Ok(a)
    };

    let mut selections = Vec::new();
    let mut comparisons = Vec::new();
    for &method in &cfg.methods {
        let mut groups: Vec<(Vec<Attribution>, Option<f64>)> = Vec::with_capacity(2);
        for selection in [Selection::Random, Selection::Similar] {
            let atts: Vec<Attribution> = (0..n)
                .into_par_iter()
                .map(|j| run(method, selection, j, 0))
                .collect::<Result<_>>()?;
            let signed = variability_with(&atts, Magnitude::Signed)?;
            let absolute = variability_with(&atts, Magnitude::Absolute)?;
            let reruns = rerun_variability(cfg, n, |j, r| run(method, selection, j, r))?;
            info!(
                "{method}/{selection}: variability {:.6} ± {:.6} over {n} anomalies",
                signed.mean, signed.sd
            );
            selections.push(SelectionSummary {
                method,
                selection,
                across_anomalies: (&signed).into(),
                across_anomalies_absolute: (&absolute).into(),
                across_reruns: reruns.clone(),
                per_feature_sd: signed.per_feature_sd.clone(),
                model_calls: atts.iter().map(|a| a.n_evals).sum(),
            });
            groups.push((atts, reruns.map(|r| r.mean)));
        }
        let [(random, random_reruns), (similar, similar_reruns)] = <[_; 2]>::try_from(groups).expect("two selections");
        let sum_random = &selections[selections.len() - 2];
        let sum_similar = &selections[selections.len() - 1];
        let pooled = |atts: &[Attribution]| atts.iter().flat_map(|a| a.phi.iter().copied()).collect::<Vec<f64>>();
        comparisons.push(MethodComparison {
            method,
            reduction_pct: reduction_pct(sum_random.across_anomalies.mean, sum_similar.across_anomalies.mean)?,
            reduction_pct_absolute: reduction_pct(
                sum_random.across_anomalies_absolute.mean,
                sum_similar.across_anomalies_absolute.mean,
            )?,
            reduction_pct_reruns: match (random_reruns, similar_reruns) {
                (Some(r), Some(s)) => reduction_pct(r, s).ok(),
                _ => None,
            },
            bartlett_feature_sd: optional_bartlett(&sum_random.per_feature_sd, &sum_similar.per_feature_sd),
            bartlett_pooled: optional_bartlett(&pooled(&random), &pooled(&similar)),
        });
    }
    let mean_reduction_pct =
        comparisons.iter().map(|c| c.reduction_pct).sum::<f64>() / comparisons.len() as f64;
    Ok(StabilityReport {
        metadata: BenchmarkMetadata {
            config: cfg.clone(),
            n_anomalies: n,
            anomaly_ids: anomaly_ids.to_vec(),
            n_features: anomalies.ncols(),
        },
        selections,
        comparisons,
        mean_reduction_pct,
    })
}

fn optional_bartlett(a: &[f64], b: &[f64]) -> Option<BartlettResult> {
    bartlett_test(a, b)
        .map_err(|e| warn!("Bartlett's test skipped: {e}"))
        .ok()
}

/// Re-explains the first anomalies with fresh seeds and averages their
/// per-anomaly variability.
fn rerun_variability<F>(cfg: &BenchmarkConfig, n: usize, run: F) -> Result<Option<VariabilitySummary>>
where
    F: Fn(usize, usize) -> Result<Attribution> + Sync,
{
    let anomalies = cfg.rerun_anomalies.min(n);
    if cfg.reruns < 2 || anomalies == 0 {
        return Ok(None);
    }
    let per_anomaly: Vec<Variability> = (0..anomalies)
        .map(|j| {
            let atts: Vec<Attribution> = (1..=cfg.reruns)
                .into_par_iter()
                .map(|r| run(j, r))
                .collect::<Result<_>>()?;
            variability_with(&atts, Magnitude::Signed)
        })
        .collect::<Result<_>>()?;
    let k = per_anomaly.len() as f64;
    Ok(Some(VariabilitySummary {
        mean: per_anomaly.iter().map(|v| v.mean).sum::<f64>() / k,
        sd: per_anomaly.iter().map(|v| v.sd).sum::<f64>() / k,
    }))
}

fn mean_sd(v: &VariabilitySummary) -> String {
    format!("{:.4} ± {:.4}", v.mean, v.sd)
}

/// One row per method: random and similar variability, Bartlett's
/// statistic and p-value on the per-feature SDs, and the reduction.
pub fn write_table_csv<W: Write>(writer: W, report: &StabilityReport, dataset: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "dataset",
        "method",
        "random",
        "similar",
        "random_mean",
        "random_sd",
        "similar_mean",
        "similar_sd",
        "statistic",
        "p_value",
        "reduction_pct",
    ])?;
    for c in &report.comparisons {
        let (Some(r), Some(s)) = (
            report.selection(c.method, Selection::Random),
            report.selection(c.method, Selection::Similar),
        ) else {
            continue;
        };
        let (stat, p) = c
            .bartlett_feature_sd
            .map(|b| (b.statistic.to_string(), b.p_value.to_string()))
            .unwrap_or_default();
        w.write_record([
            dataset.to_string(),
            c.method.to_string(),
            mean_sd(&r.across_anomalies),
            mean_sd(&s.across_anomalies),
            r.across_anomalies.mean.to_string(),
            r.across_anomalies.sd.to_string(),
            s.across_anomalies.mean.to_string(),
            s.across_anomalies.sd.to_string(),
            stat,
            p,
            c.reduction_pct.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<table writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::fixtures::{ridge, uniform};

    fn fixture() -> (crate::predictor::RidgeForecaster, ndarray::Array2<f64>, ndarray::Array2<f64>) {
        (ridge(6, 1), uniform(200, 6, 2), uniform(12, 6, 3))
    }

    fn small_cfg() -> BenchmarkConfig {
        BenchmarkConfig {
            k: 10,
            kernel_coalitions: 64,
            sampling_permutations: 3,
            permutation_pairs: 2,
            ..BenchmarkConfig::default()
        }
    }

    #[test]
    fn forced_identical_selection_has_no_reduction() {
        let (m, train, anomalies) = fixture();
        let ids: Vec<usize> = (0..12).collect();
        let cfg = small_cfg();
        let report = stability_from_backgrounds(&m, anomalies.view(), &ids, &cfg, |_, _, seed| {
            random_background(train.view(), cfg.k, seed)
        })
        .unwrap();
        for c in &report.comparisons {
            assert_eq!(c.reduction_pct, 0.0);
            let b = c.bartlett_feature_sd.unwrap();
            assert!(b.statistic <= 1e-9 && (b.p_value - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn report_shape_and_determinism() {
        let (m, train, anomalies) = fixture();
        let ids: Vec<usize> = (100..112).collect();
        let w = vec![1.0; 6];
        let cfg = small_cfg();
        let a = stability_benchmark(&m, train.view(), anomalies.view(), &ids, &w, &cfg).unwrap();
        let b = stability_benchmark(&m, train.view(), anomalies.view(), &ids, &w, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.selections.len(), 3 * 2);
        assert_eq!(a.comparisons.len(), 3);
        assert_eq!(a.metadata.anomaly_ids, ids);
        assert!(a.selections.iter().all(|s| s.across_reruns.is_some()));

        let mut csv = Vec::new();
        write_table_csv(&mut csv, &a, "synthetic").unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    }

    #[test]
    fn too_few_anomalies() {
        let (m, train, anomalies) = fixture();
        let few = anomalies.slice(ndarray::s![..5, ..]);
        let err = stability_benchmark(&m, train.view(), few, &[0, 1, 2, 3, 4], &[1.0; 6], &small_cfg());
        assert!(matches!(err, Err(Error::Sizing(_))));
    }
}
