use std::path::Path;
use std::time::Instant;

use anomex_core::analyze::{
    categorize, heatmap_export, reconstruct_prediction, stability_benchmark, write_heatmap_csv, write_table_csv,
    StabilityReport, NEGLIGIBLE_EPSILON,
};
use anomex_core::anomaly::write_jsonl;
use anomex_core::context::{random_background, select_background_with, Selection};
use anomex_core::dataset::{ingest_csv, write_csv};
use anomex_core::explain::{explain as run_explainer, ExplainerConfig, Method};
use anomex_core::pipeline::{detect as run_detection, global_importance, prepare, PreparedData};
use anomex_core::predictor::{
    ForestConfig, HorizonMetrics, MlpConfig, ModelArtifact, ModelSpec, Predictor,
};
use anomex_core::synth::{generate_series, inject_anomalies, SeriesLayout};
use anyhow::{Context, Result};
use log::info;
use ndarray::Array2;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::run_dir::RunDir;
use crate::{BenchmarkArgs, DataArgs, DetectArgs, ExplainArgs, ModelArg, SynthArgs, TrainArgs, UsageError};

pub fn synth(cfg: &mut RunConfig, args: SynthArgs) -> Result<()> {
    if let Some(v) = args.hours {
        cfg.synth.length = v;
    }
    if let Some(v) = args.anomalies {
        cfg.anomalies.spec.count = v;
    }
    if let Some(v) = args.magnitude {
        cfg.anomalies.spec.magnitude_sigmas = v;
    }
    if let Some(v) = args.kind {
        cfg.anomalies.spec.kind = v.into();
    }
    if let Some(v) = args.seed {
        cfg.synth.seed = v;
    }
    if let Some(v) = args.anomaly_seed {
        cfg.anomalies.seed = v;
    }
    cfg.synth.window_length = cfg.window.window_length;
    cfg.synth.horizon = cfg.window.horizon;

    let clean = generate_series(&cfg.synth)?;
    let layout = SeriesLayout {
        window_length: cfg.window.window_length,
        horizon: cfg.window.horizon,
        fractions: cfg.window.fractions,
    };
    let (records, truth) =
        inject_anomalies(&clean, &cfg.anomalies.spec, &layout, cfg.synth.noise_sd, cfg.anomalies.seed)?;

    let mut dir = RunDir::create(&args.out)?;
    dir.write_with("series.csv", |w| Ok(write_csv(w, &records)?))?;
    dir.write_json("ground_truth.json", &truth)?;
    dir.finish(
        "synth",
        cfg,
        json!({ "series": cfg.synth.seed, "anomalies": cfg.anomalies.seed }),
    )?;
    println!(
        "wrote {} hours with {} injected anomalies to {}",
        records.len(),
        truth.positions.len(),
        args.out.display()
    );
    Ok(())
}

fn apply_data_args(cfg: &mut RunConfig, args: &DataArgs) {
    if let Some(p) = &args.data {
        cfg.data.input = Some(p.clone());
    }
    if let Some(v) = args.window {
        cfg.window.window_length = v;
    }
    if let Some(v) = args.horizon {
        cfg.window.horizon = v;
    }
}

fn load_data(cfg: &RunConfig) -> Result<PreparedData> {
    let path = cfg
        .data
        .input
        .as_deref()
        .ok_or_else(|| UsageError("no input series: pass --data or set data.input".into()))?;
    let ingested = ingest_csv(path, &cfg.data.schema)?;
    if !ingested.report.gaps.is_empty() {
        log::warn!("{} gaps in the hourly index of {}", ingested.report.gaps.len(), path.display());
    }
    Ok(prepare(&ingested.records, &cfg.window)?)
}

fn load_model(path: &Path, data: &PreparedData) -> Result<ModelArtifact> {
    let artifact = ModelArtifact::load(path)?;
    let model = &artifact.model;
    if model.input_dim() != data.train.flat_dim() || model.output_dim() != data.train.targets.ncols() {
        return Err(anomex_core::Error::Shape(format!(
            "model maps {} inputs to {} outputs but the windows have {} inputs and {} targets",
            model.input_dim(),
            model.output_dim(),
            data.train.flat_dim(),
            data.train.targets.ncols()
        ))
        .into());
    }
    Ok(artifact)
}

fn model_seed(spec: &ModelSpec) -> Option<u64> {
    match spec {
        ModelSpec::Ridge { .. } => None,
        ModelSpec::Mlp(c) => Some(c.seed),
        ModelSpec::Forest(c) => Some(c.seed),
    }
}

pub fn train(cfg: &mut RunConfig, args: TrainArgs) -> Result<()> {
    apply_data_args(cfg, &args.data);
    let current = match cfg.model {
        ModelSpec::Ridge { .. } => ModelArg::Ridge,
        ModelSpec::Mlp(_) => ModelArg::Mlp,
        ModelSpec::Forest(_) => ModelArg::Forest,
    };
    match args.model {
        Some(kind) if kind != current => {
            cfg.model = match kind {
                ModelArg::Ridge => ModelSpec::default(),
                ModelArg::Mlp => ModelSpec::Mlp(MlpConfig::default()),
                ModelArg::Forest => ModelSpec::Forest(ForestConfig::default()),
            }
        }
        _ => {}
    }
    match (&mut cfg.model, args.lambda, args.seed) {
        (ModelSpec::Ridge { l2_lambda }, Some(l), _) => *l2_lambda = l,
        (ModelSpec::Ridge { .. }, None, _) => {}
        (_, Some(_), _) => return Err(UsageError("--lambda applies to the ridge model only".into()).into()),
        (ModelSpec::Mlp(c), None, Some(s)) => c.seed = s,
        (ModelSpec::Forest(c), None, Some(s)) => c.seed = s,
        _ => {}
    }

    let data = load_data(cfg)?;
    let started = Instant::now();
    let model = cfg.model.fit(&data.train)?;
    info!("fitted {} in {:.1}s", model.name(), started.elapsed().as_secs_f64());

    let target = data
        .feature_names()
        .iter()
        .position(|n| *n == data.metadata.target_column)
        .context("target column missing from the feature order")?;
    let scaling = &data.metadata.scaling;
    let unscale = |m: &Array2<f64>| m.mapv(|v| scaling.unscale(target, v));
    let predicted = model.predict_flat(data.test.flat_inputs())?;
    let metrics = HorizonMetrics::compute(unscale(&data.test.targets).view(), unscale(&predicted).view());

    let mut dir = RunDir::create(&args.out)?;
    ModelArtifact::new(cfg.model.clone(), model).save(dir.path("model.json"))?;
    dir.record("model.json");
    dir.write_json("metrics.json", &json!({ "split": "test", "units": "original", "metrics": metrics }))?;
    dir.write_json("dataset.json", &data.metadata)?;
    dir.finish("train", cfg, json!({ "model": model_seed(&cfg.model) }))?;
    println!(
        "test RMSE {:.4} (all horizons), {:.4} (first hour); R² {:.4}",
        metrics.all_horizons.rmse, metrics.first_horizon.rmse, metrics.all_horizons.r2
    );
    Ok(())
}

pub fn detect(cfg: &mut RunConfig, args: DetectArgs) -> Result<()> {
    apply_data_args(cfg, &args.data);
    let data = load_data(cfg)?;
    let artifact = load_model(&args.model, &data)?;
    let detection = run_detection(&artifact.model, &data)?;
    let flagged: Vec<_> = detection.anomalies().cloned().collect();

    let mut dir = RunDir::create(&args.out)?;
    dir.write_with("anomalies.jsonl", |w| Ok(write_jsonl(w, &flagged)?))?;
    dir.write_json("threshold.json", &detection.threshold)?;
    dir.finish("detect", cfg, json!({ "model": model_seed(&artifact.spec) }))?;
    println!("{} anomalies in {} test windows", flagged.len(), detection.records.len());
    Ok(())
}

#[derive(Serialize)]
struct ExplainSeeds {
    importance_forest: u64,
    background: Option<u64>,
    explainer: Option<u64>,
}

pub fn explain(cfg: &mut RunConfig, args: ExplainArgs) -> Result<()> {
    apply_data_args(cfg, &args.data);
    if let Some(m) = args.method {
        cfg.explain.method = m.into();
    }
    if let Some(s) = args.selection {
        cfg.background.selection = s.into();
    }
    if let Some(k) = args.k {
        cfg.background.k = k;
    }
    if let Some(s) = args.seed {
        cfg.explain.seed = s;
        cfg.background.seed = s;
    }
    if let Some(n) = args.samples {
        cfg.explain.n_samples = n;
    }

    let data = load_data(cfg)?;
    let artifact = load_model(&args.model, &data)?;
    let model = &artifact.model;
    let detection = run_detection(model, &data)?;
    let record = detection
        .anomalies()
        .find(|r| r.window_index == args.anomaly)
        .ok_or_else(|| {
            anomex_core::Error::Lookup(format!("test window {} is not a detected anomaly", args.anomaly))
        })?;
    let x = data.test.flat_inputs().row(record.window_index).to_owned();

    let importance = global_importance(&data, &cfg.importance)?;
    let train = data.train.flat_inputs();
    let background = match cfg.background.selection {
        Selection::Similar => {
            select_background_with(x.view(), train, &importance.transformed, cfg.background.k, cfg.background.similarity)?
        }
        Selection::Random => random_background(train, cfg.background.k, cfg.background.seed)?,
    }
    .with_anomaly(record.window_index);

    let explainer = ExplainerConfig {
        n_samples: cfg.explain.n_samples,
        seed: cfg.explain.seed,
        enumerate_threshold: cfg.explain.enumerate_threshold,
        horizon: cfg.explain.horizon,
    };
    let attribution = run_explainer(cfg.explain.method, model, x.view(), background.samples.view(), &explainer)?;
    reconstruct_prediction(&attribution)?;
    let actual = data.test.targets[[record.window_index, cfg.explain.horizon]];
    let categorized = categorize(&attribution, actual, attribution.f_x, NEGLIGIBLE_EPSILON)?;
    let names = data.feature_names();
    let heatmap = heatmap_export(&categorized, data.metadata.window_length, names)?;

    let mut dir = RunDir::create(&args.out)?;
    dir.write_json("attribution.json", &attribution.export(names)?)?;
    dir.write_json("categorization.json", &categorized)?;
    dir.write_json("heatmap.json", &heatmap)?;
    dir.write_with("heatmap.csv", |w| Ok(write_heatmap_csv(w, &heatmap)?))?;
    dir.write_json("background.json", &background.export())?;
    dir.write_json("importance.json", &importance)?;
    let seeds = ExplainSeeds {
        importance_forest: cfg.importance.seed,
        background: (cfg.background.selection == Selection::Random).then_some(cfg.background.seed),
        explainer: attribution.seed,
    };
    dir.finish("explain", cfg, seeds)?;
    println!(
        "{} attribution of window {}: base {:.4} + {:.4} = {:.4} (actual {:.4}); {} model calls",
        attribution.method,
        record.window_index,
        attribution.phi0,
        attribution.f_x - attribution.phi0,
        attribution.f_x,
        actual,
        attribution.n_evals
    );
    Ok(())
}

pub fn benchmark(cfg: &mut RunConfig, args: BenchmarkArgs) -> Result<()> {
    apply_data_args(cfg, &args.data);
    let bench = &mut cfg.benchmark;
    if let Some(k) = args.k {
        bench.stability.k = k;
    }
    if let Some(s) = args.seed {
        bench.stability.background_seed = s;
        bench.stability.explainer_seed = s;
    }
    if let Some(methods) = &args.methods {
        bench.stability.methods = methods.iter().map(|&m| Method::from(m)).collect();
    }
    if let Some(n) = args.max_anomalies {
        bench.max_anomalies = n;
    }

    let started = Instant::now();
    let data = load_data(cfg)?;
    let artifact = load_model(&args.model, &data)?;
    let model = &artifact.model;
    let detection = run_detection(model, &data)?;
    let ids: Vec<usize> = detection.anomalies().map(|r| r.window_index).take(cfg.benchmark.max_anomalies).collect();
    info!("benchmarking {} anomalies", ids.len());
    let windows = anomex_core::pipeline::windows_at(&data.test, &ids)?;
    let importance = global_importance(&data, &cfg.importance)?;
    let report = stability_benchmark(
        model,
        data.train.flat_inputs(),
        windows.view(),
        &ids,
        &importance.transformed,
        &cfg.benchmark.stability,
    )?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut dir = RunDir::create(&args.out)?;
    dir.write_json("stability.json", &report)?;
    dir.write_with("table.csv", |w| Ok(write_table_csv(w, &report, &cfg.benchmark.dataset_label)?))?;
    dir.write_with("selections.csv", |w| write_selections_csv(w, &report))?;
    dir.write_json("runtime.json", &json!({ "seconds": elapsed }))?;
    let stability = &cfg.benchmark.stability;
    dir.finish(
        "benchmark",
        cfg,
        json!({
            "importance_forest": cfg.importance.seed,
            "background": stability.background_seed,
            "explainer": stability.explainer_seed,
        }),
    )?;
    for c in &report.comparisons {
        let p = c.bartlett_feature_sd.map(|b| format!("{:.3e}", b.p_value)).unwrap_or_else(|| "n/a".into());
        println!("{:<12} reduction {:>6.1}%  Bartlett p {p}", c.method.as_str(), c.reduction_pct);
    }
    println!(
        "mean reduction {:.1}% over {} anomalies in {:.1}s",
        report.mean_reduction_pct, report.metadata.n_anomalies, elapsed
    );
    Ok(())
}

/// One row per method and selection.
fn write_selections_csv<W: std::io::Write>(writer: W, report: &StabilityReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["method", "selection", "mean", "sd", "abs_mean", "abs_sd", "rerun_mean", "rerun_sd", "model_calls"])?;
    for s in &report.selections {
        let rerun = |f: fn(&anomex_core::analyze::VariabilitySummary) -> f64| {
            s.across_reruns.as_ref().map(|r| f(r).to_string()).unwrap_or_default()
        };
        out.write_record([
            s.method.as_str().to_string(),
            s.selection.to_string(),
            s.across_anomalies.mean.to_string(),
            s.across_anomalies.sd.to_string(),
            s.across_anomalies_absolute.mean.to_string(),
            s.across_anomalies_absolute.sd.to_string(),
            rerun(|r| r.mean),
            rerun(|r| r.sd),
            s.model_calls.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
