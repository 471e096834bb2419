//! Acceptance suite. Each test checks one criterion end to end and prints a
//! single `PASS`/`FAIL` line before asserting.

use std::time::{Duration, Instant};

use anomex_core::analyze::{
    bartlett_test, categorize, stability_benchmark, BenchmarkConfig, Role, StabilityReport, NEGLIGIBLE_EPSILON,
};
use anomex_core::context::{select_background, weighted_cosine};
use anomex_core::dataset::TimeSeriesRecord;
use anomex_core::explain::{
    exact_shapley, explain, kernel_shap, masked_prediction, Attribution, ExplainerConfig, Method,
};
use anomex_core::pipeline::{detect, global_importance, prepare, windows_at, Detection, PreparedData, WindowConfig};
use anomex_core::predictor::{
    fit_forest, fit_ridge, forest_importance, ForestConfig, MlpConfig, MlpForecaster, Predictor, RidgeForecaster,
};
use anomex_core::synth::{
    generate_series, inject_anomalies, AnomalyRegion, AnomalySpec, GroundTruth, SeriesLayout, SynthConfig,
};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Writes to the stdout handle rather than through `println!`, so the line
/// shows even when the harness captures test output.
fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    let line = format!(
        "ACCEPTANCE {id} {name}: {} ({detail}; {:.1}s)\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), line.as_bytes());
}

struct Fixture {
    data: PreparedData,
    truth: GroundTruth,
    model: RidgeForecaster,
    detection: Detection,
}

fn synthetic(seed: u64, spec: &AnomalySpec) -> (Vec<TimeSeriesRecord>, GroundTruth) {
    let cfg = SynthConfig { seed, ..SynthConfig::default() };
    let clean = generate_series(&cfg).unwrap();
    inject_anomalies(&clean, spec, &SeriesLayout::default(), cfg.noise_sd, seed.wrapping_add(1)).unwrap()
}

fn fixture(seed: u64, spec: &AnomalySpec) -> Fixture {
    let (records, truth) = synthetic(seed, spec);
    let data = prepare(&records, &WindowConfig::default()).unwrap();
    let model = fit_ridge(&data.train, 1.0).unwrap();
    let detection = detect(&model, &data).unwrap();
    Fixture { data, truth, model, detection }
}

/// Thirty 8σ spikes confined to the test split.
fn test_spikes() -> AnomalySpec {
    AnomalySpec {
        region: AnomalyRegion::TestOnly,
        min_separation: 24,
        ..AnomalySpec::default()
    }
}

fn stability_run(seed: u64) -> StabilityReport {
    let fx = fixture(seed, &test_spikes());
    let ids: Vec<usize> = fx.detection.anomalies().map(|r| r.window_index).take(30).collect();
    let windows = windows_at(&fx.data.test, &ids).unwrap();
    let gfi = global_importance(&fx.data, &ForestConfig { seed, ..ForestConfig::default() }).unwrap();
    let cfg = BenchmarkConfig {
        background_seed: seed,
        explainer_seed: seed,
        ..BenchmarkConfig::default()
    };
    stability_benchmark(
        &fx.model,
        fx.data.train.flat_inputs(),
        windows.view(),
        &ids,
        &gfi.transformed,
        &cfg,
    )
    .unwrap()
}

#[test]
fn criterion_4_stability_of_similar_backgrounds() {
    let start = Instant::now();
    let mut passing = 0;
    let mut lines = Vec::new();
    for seed in 0..10u64 {
        let t = Instant::now();
        let r = stability_run(seed);
        let best_p = r
            .comparisons
            .iter()
            .filter_map(|c| c.bartlett_feature_sd.map(|b| b.p_value))
            .fold(f64::INFINITY, f64::min);
        let reductions: Vec<String> = r.comparisons.iter().map(|c| format!("{}={:.1}%", c.method, c.reduction_pct)).collect();
        let ok = r.mean_reduction_pct >= 20.0 && best_p < 0.05;
        passing += ok as usize;
        let line = format!(
            "seed {seed}: n={} mean reduction {:.1}% [{}] min p {:.3e} {} ({:.1}s)",
            r.metadata.n_anomalies,
            r.mean_reduction_pct,
            reductions.join(", "),
            best_p,
            if ok { "ok" } else { "below floor" },
            t.elapsed().as_secs_f64()
        );
        println!("  {line}");
        lines.push(line);
    }
    let elapsed = start.elapsed();
    let pass = passing >= 8 && elapsed < Duration::from_secs(600);
    report(4, "stability", pass, &format!("{passing}/10 seeds at >= 20% with p < 0.05"), elapsed);
    assert!(pass, "{}", lines.join("\n"));
}

fn uniform(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0))
}

fn random_ridge(d: usize, rng: &mut ChaCha8Rng) -> RidgeForecaster {
    RidgeForecaster {
        coef: Array2::from_shape_fn((1, d), |_| rng.gen_range(-2.0..2.0)),
        intercept: Array1::from_elem(1, rng.gen_range(-1.0..1.0)),
        l2_lambda: 0.0,
    }
}

fn random_mlp(d: usize, seed: u64) -> MlpForecaster {
    MlpForecaster::init(d, 1, &MlpConfig { hidden: 8, seed, ..MlpConfig::default() }).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Shapley values by averaging marginal contributions over every ordering.
fn brute_force_shapley<P: Predictor>(model: &P, x: &Array1<f64>, bg: ArrayView2<'_, f64>) -> Vec<f64> {
    fn orderings(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == items.len() {
            out.push(items.clone());
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            orderings(items, k + 1, out);
            items.swap(k, i);
        }
    }
    let d = x.len();
    let mut all = Vec::new();
    orderings(&mut (0..d).collect(), 0, &mut all);
    let mut phi = vec![0.0; d];
    for order in &all {
        let mut coalition = Vec::new();
        let mut before = masked_prediction(model, x.view(), &coalition, bg, 0).unwrap();
        for &i in order {
            coalition.push(i);
            let after = masked_prediction(model, x.view(), &coalition, bg, 0).unwrap();
            phi[i] += after - before;
            before = after;
        }
    }
    phi.iter().map(|p| p / all.len() as f64).collect()
}

fn linear_closed_form(model: &RidgeForecaster, x: &Array1<f64>, bg: ArrayView2<'_, f64>) -> Vec<f64> {
    let means = bg.mean_axis(Axis(0)).unwrap();
    (0..x.len()).map(|i| model.coef[[0, i]] * (x[i] - means[i])).collect()
}

#[test]
fn criterion_1_kernel_matches_exact() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let fixtures = 27;
    for i in 0..fixtures {
        let d = 4 + i % 9;
        let k = [1, 5, 20][i % 3];
        let x = uniform(1, d, &mut rng).row(0).to_owned();
        let bg = uniform(k, d, &mut rng);
        let cfg = ExplainerConfig::default();
        let (kernel, exact) = if i % 2 == 0 {
            let m = random_ridge(d, &mut rng);
            (kernel_shap(&m, x.view(), bg.view(), &cfg).unwrap(), exact_shapley(&m, x.view(), bg.view(), 0).unwrap())
        } else {
            let m = random_mlp(d, i as u64);
            (kernel_shap(&m, x.view(), bg.view(), &cfg).unwrap(), exact_shapley(&m, x.view(), bg.view(), 0).unwrap())
        };
        assert!(kernel.seed.is_none(), "fixture {i} was not enumerated");
        worst = worst.max(max_abs_diff(&kernel.phi, &exact.phi));
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-6 && elapsed < Duration::from_secs(120);
    report(1, "kernel vs exact", pass, &format!("{fixtures} fixtures, max |dphi| {worst:.2e}"), elapsed);
    assert!(pass);
}

#[test]
fn criterion_2_efficiency_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    let mut worst_ratio = 0.0f64;
    let mut check = |a: &Attribution| {
        checked += 1;
        worst_ratio = worst_ratio.max(a.efficiency_gap() / a.method.efficiency_tolerance());
    };
    for i in 0..12usize {
        let d = [6, 12, 480][i % 3];
        let x = uniform(1, d, &mut rng).row(0).to_owned();
        let bg = uniform([1, 20, 100][i % 3], d, &mut rng);
        let methods: &[Method] = if d <= 12 {
            &[Method::Kernel, Method::Sampling, Method::Permutation, Method::Exact]
        } else {
            &[Method::Kernel, Method::Sampling, Method::Permutation]
        };
        for &method in methods {
            let n_samples = if method == Method::Kernel { 1024 } else { 16 };
            let cfg = ExplainerConfig { n_samples, seed: i as u64, ..ExplainerConfig::default() };
            let a = if i % 2 == 0 {
                explain(method, &random_ridge(d, &mut rng), x.view(), bg.view(), &cfg).unwrap()
            } else {
                explain(method, &random_mlp(d, i as u64), x.view(), bg.view(), &cfg).unwrap()
            };
            check(&a);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_ratio <= 1.0;
    report(
        2,
        "efficiency",
        pass,
        &format!("{checked} attributions, worst gap {worst_ratio:.2e} of tolerance"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_3_linear_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // The closed form itself, against averaging over all 5! orderings.
    let mut oracle_gap = 0.0f64;
    for _ in 0..5 {
        let m = random_ridge(5, &mut rng);
        let x = uniform(1, 5, &mut rng).row(0).to_owned();
        let bg = uniform(7, 5, &mut rng);
        oracle_gap = oracle_gap.max(max_abs_diff(
            &linear_closed_form(&m, &x, bg.view()),
            &brute_force_shapley(&m, &x, bg.view()),
        ));
    }

    let mut deterministic_gap = 0.0f64;
    let mut sampler_excess = 0.0f64;
    for i in 0..6u64 {
        let d = [8, 12, 48][i as usize % 3];
        let m = random_ridge(d, &mut rng);
        let x = uniform(1, d, &mut rng).row(0).to_owned();
        let bg = uniform(20, d, &mut rng);
        let expected = linear_closed_form(&m, &x, bg.view());
        let kernel_cfg = ExplainerConfig { n_samples: 4096, seed: i, ..ExplainerConfig::default() };
        let mut deterministic = vec![kernel_shap(&m, x.view(), bg.view(), &kernel_cfg).unwrap()];
        if d <= 12 {
            deterministic.push(exact_shapley(&m, x.view(), bg.view(), 0).unwrap());
        }
        for a in &deterministic {
            deterministic_gap = deterministic_gap.max(max_abs_diff(&a.phi, &expected));
        }
        let samplers = [
            (Method::Sampling, 2000),
            (Method::Permutation, 1000),
        ];
        for (method, n) in samplers {
            let cfg = ExplainerConfig { n_samples: n, seed: i, ..ExplainerConfig::default() };
            let a = explain(method, &m, x.view(), bg.view(), &cfg).unwrap();
            let se = a.std_err.as_ref().unwrap();
            for ((phi, want), s) in a.phi.iter().zip(&expected).zip(se) {
                sampler_excess = sampler_excess.max((phi - want).abs() - (3.0 * s + 1e-9));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = oracle_gap <= 1e-12 && deterministic_gap <= 1e-6 && sampler_excess <= 0.0;
    report(
        3,
        "linear closed form",
        pass,
        &format!(
            "closed form vs orderings {oracle_gap:.1e}, exact/kernel {deterministic_gap:.1e}, samplers beyond 3 SE {:.1e}",
            sampler_excess.max(0.0)
        ),
        elapsed,
    );
    assert!(pass);
}

/// Test-window index whose first target hour is the given series row.
fn window_of(data: &PreparedData, row: usize) -> Option<usize> {
    let start = data.metadata.splits.test.0 + data.metadata.window_length;
    row.checked_sub(start).filter(|&w| w < data.test.len())
}

#[test]
fn criterion_5_detection_recall() {
    let start = Instant::now();
    let (mut hits, mut injected) = (0usize, 0usize);
    let (mut false_flags, mut clean_windows) = (0usize, 0usize);
    for seed in 0..10u64 {
        let fx = fixture(seed, &test_spikes());
        for &p in &fx.truth.positions {
            injected += 1;
            let w = window_of(&fx.data, p).expect("anomaly inside a test window target");
            hits += fx.detection.records[w].is_anomalous() as usize;
        }

        let clean = generate_series(&SynthConfig { seed, ..SynthConfig::default() }).unwrap();
        let data = prepare(&clean, &WindowConfig::default()).unwrap();
        let model = fit_ridge(&data.train, 1.0).unwrap();
        let det = detect(&model, &data).unwrap();
        false_flags += det.anomaly_count();
        clean_windows += det.records.len();
    }
    let recall = hits as f64 / injected as f64;
    let fpr = false_flags as f64 / clean_windows as f64;
    let elapsed = start.elapsed();
    let pass = recall >= 0.9 && fpr <= 0.05 && elapsed < Duration::from_secs(60);
    report(
        5,
        "detection",
        pass,
        &format!("recall {hits}/{injected} = {recall:.3}, clean false-positive rate {fpr:.4}"),
        elapsed,
    );
    assert!(pass);
}

/// Weighted cosine written out directly, for the brute-force ranking.
fn cosine(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += w[i] * a[i] * b[i];
        aa += w[i] * a[i] * a[i];
        bb += w[i] * b[i] * b[i];
    }
    ab / (aa.sqrt() * bb.sqrt())
}

#[test]
fn criterion_6_background_selection() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut matched = 0;
    let instances = 50;
    for _ in 0..instances {
        let n = rng.gen_range(1..=5000);
        let d = rng.gen_range(2..=60);
        let k = rng.gen_range(1..=n.min(150));
        let train = uniform(n, d, &mut rng);
        let x = uniform(1, d, &mut rng).row(0).to_owned();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0f64).exp()).collect();

        let xs = x.as_slice().unwrap();
        let mut ranked: Vec<(f64, usize)> =
            train.outer_iter().enumerate().map(|(r, row)| (cosine(row.as_slice().unwrap(), xs, &w), r)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut expected: Vec<usize> = ranked[..k].iter().map(|p| p.1).collect();
        expected.sort_unstable();

        let mut got = select_background(x.view(), train.view(), &w, k).unwrap().row_indices;
        got.sort_unstable();
        matched += (got == expected) as usize;
    }
    let elapsed = start.elapsed();
    let pass = matched == instances && elapsed < Duration::from_secs(30);
    report(6, "background selection", pass, &format!("{matched}/{instances} index sets equal"), elapsed);
    assert!(pass);
}

#[test]
fn criterion_7_numerical_hygiene() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut worst_grad = 0.0f64;
    for seed in 0..3u64 {
        let x = uniform(20, 6, &mut rng);
        let y = uniform(20, 3, &mut rng);
        let mut model = MlpForecaster::init(6, 3, &MlpConfig { hidden: 7, seed, ..MlpConfig::default() }).unwrap();
        let analytic = model.loss_and_gradient(x.view(), y.view()).1.flatten();
        let params = model.parameters();
        for i in 0..params.len() {
            let step = 1e-6;
            let mut p = params.clone();
            p[i] += step;
            model.set_parameters(&p);
            let up = model.loss(x.view(), y.view());
            p[i] -= 2.0 * step;
            model.set_parameters(&p);
            let down = model.loss(x.view(), y.view());
            model.set_parameters(&params);
            let numeric = (up - down) / (2.0 * step);
            let rel = (numeric - analytic[i]).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
            worst_grad = worst_grad.max(rel);
        }
    }

    let records = generate_series(&SynthConfig { length: 24 * 120, seed: 7, ..SynthConfig::default() }).unwrap();
    let data = prepare(&records, &WindowConfig { window_length: 24, horizon: 6, ..WindowConfig::default() }).unwrap();
    let forest = fit_forest(
        data.train.flat_inputs(),
        data.train.targets_at(0),
        &ForestConfig { n_trees: 20, seed: 7, ..ForestConfig::default() },
    )
    .unwrap();
    let importance_sum: f64 = forest_importance(&forest).unwrap().iter().sum();

    let mut worst_self = 0.0f64;
    for _ in 0..100 {
        let d = rng.gen_range(1..=500);
        let v = uniform(1, d, &mut rng).row(0).to_owned();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..3.0)).collect();
        worst_self = worst_self.max((weighted_cosine(v.view(), v.view(), &w).unwrap() - 1.0).abs());
    }

    let mut invariant = 0;
    let trials = 20;
    for _ in 0..trials {
        let d = rng.gen_range(2..=40);
        let train = uniform(rng.gen_range(20..=800), d, &mut rng);
        let x = uniform(1, d, &mut rng).row(0).to_owned();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0f64).exp()).collect();
        let k = rng.gen_range(1..=train.nrows());
        let base = select_background(x.view(), train.view(), &w, k).unwrap().row_indices;
        let same = [1e-3, 0.5, 7.0, 1e4].iter().all(|c| {
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            select_background(x.view(), train.view(), &scaled, k).unwrap().row_indices == base
        });
        invariant += same as usize;
    }

    let elapsed = start.elapsed();
    let pass = worst_grad <= 1e-4
        && (importance_sum - 1.0).abs() <= 1e-9
        && worst_self <= 1e-12
        && invariant == trials;
    report(
        7,
        "numerical hygiene",
        pass,
        &format!(
            "gradient rel err {worst_grad:.1e}, importance sum - 1 = {:.1e}, self-similarity err {worst_self:.1e}, rescale-invariant {invariant}/{trials}",
            importance_sum - 1.0
        ),
        elapsed,
    );
    assert!(pass);
}

/// χ²₁ upper tail, 2(1 − Φ(√x)), with Φ's central mass integrated by
/// composite Simpson's rule.
fn chi2_1_survival(x: f64) -> f64 {
    let z = x.sqrt();
    let n = 20_000;
    let h = z / n as f64;
    let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(z);
    for i in 1..n {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * s * h / 3.0
}

fn bartlett_statistic(a: &[f64], b: &[f64]) -> f64 {
    let var = |g: &[f64]| {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        g.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (g.len() as f64 - 1.0)
    };
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = ((na - 1.0) * var(a) + (nb - 1.0) * var(b)) / (na + nb - 2.0);
    let top = (na + nb - 2.0) * pooled.ln() - (na - 1.0) * var(a).ln() - (nb - 1.0) * var(b).ln();
    top / (1.0 + (1.0 / (na - 1.0) + 1.0 / (nb - 1.0) - 1.0 / (na + nb - 2.0)) / 3.0)
}

#[test]
fn criterion_8_bartlett() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_p = 0.0f64;
    for _ in 0..20 {
        let sd_a = rng.gen_range(0.2..3.0);
        let sd_b = rng.gen_range(0.2..3.0);
        let n_a = rng.gen_range(5..60);
        let a: Vec<f64> = Normal::new(0.0, sd_a).unwrap().sample_iter(&mut rng).take(n_a).collect();
        let n_b = rng.gen_range(5..60);
        let b: Vec<f64> = Normal::new(1.0, sd_b).unwrap().sample_iter(&mut rng).take(n_b).collect();
        let r = bartlett_test(&a, &b).unwrap();
        worst_p = worst_p.max((r.p_value - chi2_1_survival(bartlett_statistic(&a, &b))).abs());
    }
    let mut worst_equal = 0.0f64;
    for _ in 0..20 {
        let g: Vec<f64> = Normal::new(0.0, 1.0).unwrap().sample_iter(&mut rng).take(30).collect();
        let shifted: Vec<f64> = g.iter().map(|v| v + 5.0).collect();
        worst_equal = worst_equal.max(bartlett_test(&g, &g).unwrap().statistic);
        worst_equal = worst_equal.max(bartlett_test(&g, &shifted).unwrap().statistic);
    }
    let elapsed = start.elapsed();
    let pass = worst_p <= 1e-6 && worst_equal <= 1e-9;
    report(
        8,
        "bartlett",
        pass,
        &format!("max p-value gap {worst_p:.1e} over 20 pairs, equal-variance statistic {worst_equal:.1e}"),
        elapsed,
    );
    assert!(pass);
}

fn attribution(phi: Vec<f64>, phi0: f64) -> Attribution {
    Attribution {
        f_x: phi0 + phi.iter().sum::<f64>(),
        phi,
        phi0,
        method: Method::Exact,
        n_evals: 0,
        seed: None,
        std_err: None,
        horizon: 0,
    }
}

fn swapped(role: Role) -> Role {
    match role {
        Role::Contributor => Role::Offset,
        Role::Offset => Role::Contributor,
        Role::Negligible => Role::Negligible,
    }
}

#[test]
fn criterion_9_categorization() {
    let start = Instant::now();
    let (predicted, actual) = (1.60, 4.75);
    let phi = vec![-0.9, 0.4, 0.0, -0.25, 0.05, 1e-9];
    let a = attribution(phi.clone(), predicted - phi.iter().sum::<f64>());
    let c = categorize(&a, actual, predicted, NEGLIGIBLE_EPSILON).unwrap();
    let expected = [
        Role::Contributor,
        Role::Offset,
        Role::Negligible,
        Role::Contributor,
        Role::Offset,
        Role::Negligible,
    ];
    let labels_ok = c.roles == expected && (actual - predicted - 3.15f64).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut antisymmetric = 0;
    for _ in 0..100 {
        let d = rng.gen_range(1..50);
        let phi: Vec<f64> = (0..d)
            .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        let a = attribution(phi, rng.gen_range(-1.0..1.0));
        let (p, q) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let forward = categorize(&a, p, q, NEGLIGIBLE_EPSILON).unwrap();
        let backward = categorize(&a, q, p, NEGLIGIBLE_EPSILON).unwrap();
        antisymmetric += forward.roles.iter().zip(&backward.roles).all(|(f, b)| *b == swapped(*f)) as usize;
    }
    let elapsed = start.elapsed();
    let pass = labels_ok && antisymmetric == 100;
    report(
        9,
        "categorization",
        pass,
        &format!("worked example labels {}, antisymmetric {antisymmetric}/100", if labels_ok { "match" } else { "differ" }),
        elapsed,
    );
    assert!(pass);
}
