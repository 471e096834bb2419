//! Random forest of variance-reduction regression trees.
//!
//! Trees support several outputs at once (impurity is the summed variance
//! across outputs), so the same forest serves as an h-step forecaster and,
//! with a single output, as the global-importance surrogate. Splits are
//! found with per-feature presorted sample lists that are stably
//! partitioned as the tree grows, so each level costs O(N·D) instead of a
//! sort per node.

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_input, check_output, Predictor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features considered at each split.
    pub feature_subsample: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 5,
            feature_subsample: 1.0 / 3.0,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Weighted impurity decrease: (SSE_node − SSE_left − SSE_right) / root weight.
        impurity_decrease: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    fn add_importance(&self, acc: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split {
                feature,
                impurity_decrease,
                ..
            } = node
            {
                acc[*feature] += impurity_decrease;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestRegressor {
    pub config: ForestConfig,
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
    pub n_outputs: usize,
    /// Out-of-bag mean squared error, when bootstrapping left rows out.
    pub oob_mse: Option<f64>,
}

/// Fits a single-output forest on flattened windows.
pub fn fit_forest(
    flat_train: ArrayView2<'_, f64>,
    targets: ndarray::ArrayView1<'_, f64>,
    cfg: &ForestConfig,
) -> Result<RandomForestRegressor> {
    let y = targets.insert_axis(ndarray::Axis(1));
    RandomForestRegressor::new(cfg.clone()).fit(flat_train, y)
}

/// Mean decrease in variance per feature, normalized to sum to 1. All zeros
/// when no tree ever split.
pub fn forest_importance(forest: &RandomForestRegressor) -> Result<Vec<f64>> {
    if forest.trees.is_empty() {
        return Err(Error::State("forest has not been fitted".into()));
    }
    let mut acc = vec![0.0; forest.n_features];
    for tree in &forest.trees {
        tree.add_importance(&mut acc);
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        acc.iter_mut().for_each(|v| *v /= total);
    }
    Ok(acc)
}

impl RandomForestRegressor {
    /// An unfitted forest.
    pub fn new(config: ForestConfig) -> Self {
        Self {
            config,
            trees: Vec::new(),
            n_features: 0,
            n_outputs: 0,
            oob_mse: None,
        }
    }

    pub fn is_fitted(&self) -> bool {
        !self.trees.is_empty()
    }

    pub fn fit(mut self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Self> {
        let cfg = &self.config;
        let (n, d) = x.dim();
        if y.nrows() != n || y.ncols() == 0 || d == 0 {
            return Err(Error::Shape(format!(
                "forest fit: {n}×{d} inputs with {}×{} targets",
                y.nrows(),
                y.ncols()
            )));
        }
        if cfg.n_trees == 0 || cfg.min_samples_leaf == 0 {
            return Err(Error::Parameter(
                "n_trees and min_samples_leaf must be positive".into(),
            ));
        }
        if !(cfg.feature_subsample > 0.0 && cfg.feature_subsample <= 1.0) {
            return Err(Error::Parameter("feature_subsample must lie in (0, 1]".into()));
        }
        if n < 2 * cfg.min_samples_leaf {
            return Err(Error::Sizing(format!(
                "{n} samples cannot fill two leaves of {}",
                cfg.min_samples_leaf
            )));
        }

        let data = ColumnData::new(x, y);
        let presorted: Vec<Vec<u32>> = (0..d)
            .into_par_iter()
            .map(|j| {
                let col = &data.columns[j];
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();

        let fitted: Vec<(RegressionTree, Vec<f64>)> = (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(t as u64);
                let weights = if cfg.bootstrap {
                    let mut w = vec![0.0; n];
                    for _ in 0..n {
                        w[rng.gen_range(0..n)] += 1.0;
                    }
                    w
                } else {
                    vec![1.0; n]
                };
                let tree = TreeBuilder::new(&data, &presorted, &weights, cfg, rng).build();
                (tree, weights)
            })
            .collect();

        let h = data.n_outputs;
        let mut oob_sum = vec![0.0; n * h];
        let mut oob_count = vec![0usize; n];
        let rows = x.as_standard_layout();
        for (tree, weights) in &fitted {
            for r in 0..n {
                if weights[r] == 0.0 {
                    let row = rows.row(r);
                    for (o, v) in tree.leaf(row.as_slice().expect("standard layout")).iter().enumerate() {
                        oob_sum[r * h + o] += v;
                    }
                    oob_count[r] += 1;
                }
            }
        }
        let mut se = 0.0;
        let mut m = 0usize;
        for r in 0..n {
            if oob_count[r] > 0 {
                for o in 0..h {
                    let p = oob_sum[r * h + o] / oob_count[r] as f64;
                    se += (p - data.targets[r * h + o]).powi(2);
                    m += 1;
                }
            }
        }

        self.trees = fitted.into_iter().map(|(t, _)| t).collect();
        self.n_features = d;
        self.n_outputs = h;
        self.oob_mse = (m > 0).then(|| se / m as f64);
        if self.trees.iter().all(|t| t.nodes.len() == 1) {
            log::warn!("forest is degenerate: no tree found a variance-reducing split");
        }
        Ok(self)
    }
}

impl Predictor for RandomForestRegressor {
    fn name(&self) -> &'static str {
        "forest"
    }

    fn input_dim(&self) -> usize {
        self.n_features
    }

    fn output_dim(&self) -> usize {
        self.n_outputs
    }

    fn predict_flat(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if !self.is_fitted() {
            return Err(Error::State("forest has not been fitted".into()));
        }
        check_input(self, &inputs)?;
        let mut out = Array2::zeros((inputs.nrows(), self.n_outputs));
        let scale = 1.0 / self.trees.len() as f64;
        for (row, mut dst) in inputs.outer_iter().zip(out.outer_iter_mut()) {
            let row = row.to_vec();
            for tree in &self.trees {
                for (d, v) in dst.iter_mut().zip(tree.leaf(&row)) {
                    *d += v;
                }
            }
            dst.mapv_inplace(|v| v * scale);
        }
        Ok(out)
    }

    fn predict_output(&self, inputs: ArrayView2<'_, f64>, output: usize) -> Result<Array1<f64>> {
        check_output(self, output)?;
        Ok(self.predict_flat(inputs)?.column(output).to_owned())
    }
}

struct ColumnData {
    /// Feature-major copy of the inputs.
    columns: Vec<Vec<f64>>,
    /// Row-major targets, n × n_outputs.
    targets: Vec<f64>,
    n_outputs: usize,
}

impl ColumnData {
    fn new(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Self {
        Self {
            columns: x.columns().into_iter().map(|c| c.to_vec()).collect(),
            targets: y.iter().copied().collect(),
            n_outputs: y.ncols(),
        }
    }
}

/// Grows one tree on its in-bag rows, renumbered densely so the columns it
/// scans stay small.
struct TreeBuilder<'a> {
    data: ColumnData,
    weights: Vec<f64>,
    /// `weight · target` per row when there is a single output.
    weighted_targets: Vec<f64>,
    /// Per feature: in-bag rows, sorted by value within each node's segment.
    order: Vec<Vec<u32>>,
    scratch: Vec<u32>,
    goes_left: Vec<bool>,
    cfg: &'a ForestConfig,
    m_try: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    root_weight: f64,
}

struct NodeStats {
    weight: f64,
    sums: Vec<f64>,
    sse: f64,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<'a> TreeBuilder<'a> {
    fn new(
        full: &ColumnData,
        presorted: &[Vec<u32>],
        weights: &[f64],
        cfg: &'a ForestConfig,
        rng: ChaCha8Rng,
    ) -> Self {
        let in_bag: Vec<usize> = (0..weights.len()).filter(|&r| weights[r] > 0.0).collect();
        let mut dense = vec![u32::MAX; weights.len()];
        for (i, &r) in in_bag.iter().enumerate() {
            dense[r] = i as u32;
        }
        let h = full.n_outputs;
        let data = ColumnData {
            columns: full.columns.iter().map(|c| in_bag.iter().map(|&r| c[r]).collect()).collect(),
            targets: in_bag.iter().flat_map(|&r| &full.targets[r * h..(r + 1) * h]).copied().collect(),
            n_outputs: h,
        };
        let weights: Vec<f64> = in_bag.iter().map(|&r| weights[r]).collect();
        let n = in_bag.len();
        let order: Vec<Vec<u32>> = presorted
            .iter()
            .map(|idx| {
                let mut kept = vec![0u32; n + 1];
                let mut len = 0;
                for &r in idx {
                    let i = dense[r as usize];
                    kept[len] = i;
                    len += (i != u32::MAX) as usize;
                }
                kept.truncate(len);
                kept
            })
            .collect();
        let d = data.columns.len();
        let m_try = ((cfg.feature_subsample * d as f64).round() as usize).clamp(1, d);
        let weighted_targets = if h == 1 {
            weights.iter().zip(&data.targets).map(|(w, y)| w * y).collect()
        } else {
            Vec::new()
        };
        Self {
            data,
            root_weight: weights.iter().sum(),
            weights,
            weighted_targets,
            order,
            scratch: vec![0; 2 * n + 1],
            goes_left: vec![false; n],
            cfg,
            m_try,
            rng,
            nodes: Vec::new(),
        }
    }

    fn build(mut self) -> RegressionTree {
        let hi = self.order[0].len();
        self.grow(0, hi, 0);
        RegressionTree { nodes: self.nodes }
    }

    fn stats(&self, lo: usize, hi: usize) -> NodeStats {
        let h = self.data.n_outputs;
        let mut sums = vec![0.0; h];
        let mut squares = 0.0;
        let mut weight = 0.0;
        for &r in &self.order[0][lo..hi] {
            let r = r as usize;
            let w = self.weights[r];
            weight += w;
            for (o, s) in sums.iter_mut().enumerate() {
                let v = self.data.targets[r * h + o];
                *s += w * v;
                squares += w * v * v;
            }
        }
        let sse = squares - sums.iter().map(|s| s * s).sum::<f64>() / weight;
        NodeStats {
            weight,
            sums,
            sse: sse.max(0.0),
        }
    }

    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let stats = self.stats(lo, hi);
        let id = self.nodes.len();
        let leaf_value: Vec<f64> = stats.sums.iter().map(|s| s / stats.weight).collect();
        self.nodes.push(Node::Leaf {
            value: leaf_value,
        });

        let min_leaf = self.cfg.min_samples_leaf as f64;
        let pure = stats.sse <= 1e-14 * stats.weight;
        if depth >= self.cfg.max_depth || stats.weight < 2.0 * min_leaf || pure {
            return id;
        }
        let Some(best) = self.best_split(lo, hi, &stats) else {
            return id;
        };

        let column = &self.data.columns[best.feature];
        for &r in &self.order[0][lo..hi] {
            self.goes_left[r as usize] = column[r as usize] <= best.threshold;
        }
        let mut mid = lo;
        for &r in &self.order[0][lo..hi] {
            mid += self.goes_left[r as usize] as usize;
        }
        // Leaf children only read the first list, so the rest can stay put.
        let children_split = depth + 1 < self.cfg.max_depth;
        let lists = if children_split { self.order.len() } else { 1 };
        let n_seg = hi - lo;
        let (left_buf, right_buf) = self.scratch.split_at_mut(n_seg);
        for f in 0..lists {
            let seg = &mut self.order[f][lo..hi];
            let (mut l, mut r) = (0, 0);
            for &row in seg.iter() {
                let g = self.goes_left[row as usize] as usize;
                left_buf[l] = row;
                right_buf[r] = row;
                l += g;
                r += 1 - g;
            }
            seg[..l].copy_from_slice(&left_buf[..l]);
            seg[l..].copy_from_slice(&right_buf[..r]);
        }

        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            impurity_decrease: best.gain / self.root_weight,
        };
        id
    }

    fn best_split(&mut self, lo: usize, hi: usize, node: &NodeStats) -> Option<BestSplit> {
        let h = self.data.n_outputs;
        let min_leaf = self.cfg.min_samples_leaf as f64;
        let d = self.data.columns.len();
        let candidates = sample(&mut self.rng, d, self.m_try);
        let parent_term: f64 = node.sums.iter().map(|s| s * s).sum::<f64>() / node.weight;
        let mut best: Option<BestSplit> = None;
        let mut left_sums = vec![0.0; h];

        if h == 1 {
            for feature in candidates.iter() {
                let seg = &self.order[feature][lo..hi];
                let found = scan_single_output(
                    &self.data.columns[feature],
                    seg,
                    &self.weights,
                    &self.weighted_targets,
                    node,
                    min_leaf,
                );
                if let Some((children, threshold)) = found {
                    let gain = children - parent_term;
                    if best.as_ref().map_or(true, |b| gain > b.gain) {
                        best = Some(BestSplit { feature, threshold, gain });
                    }
                }
            }
            return best.filter(|b| b.gain > 1e-12 * node.sse.max(f64::MIN_POSITIVE) && b.gain > 0.0);
        }

        for feature in candidates.iter() {
            let column = &self.data.columns[feature];
            let seg = &self.order[feature][lo..hi];
            left_sums.iter_mut().for_each(|s| *s = 0.0);
            let mut left_w = 0.0;
            let mut here = column[seg[0] as usize];
            for k in 0..seg.len() - 1 {
                let r = seg[k] as usize;
                let w = self.weights[r];
                left_w += w;
                let targets = &self.data.targets[r * h..(r + 1) * h];
                for (s, v) in left_sums.iter_mut().zip(targets) {
                    *s += w * v;
                }
                let next = column[seg[k + 1] as usize];
                let prev = std::mem::replace(&mut here, next);
                if prev == next {
                    continue;
                }
                let right_w = node.weight - left_w;
                if left_w < min_leaf || right_w < min_leaf {
                    continue;
                }
                let children: f64 = left_sums
                    .iter()
                    .zip(&node.sums)
                    .map(|(&sl, &total)| {
                        let sr = total - sl;
                        sl * sl / left_w + sr * sr / right_w
                    })
                    .sum();
                let gain = children - parent_term;
                if best.as_ref().map_or(true, |b| gain > b.gain) {
                    best = Some(BestSplit {
                        feature,
                        threshold: prev + (next - prev) / 2.0,
                        gain,
                    });
                }
            }
        }
        // only strictly variance-reducing splits
        best.filter(|b| b.gain > 1e-12 * node.sse.max(f64::MIN_POSITIVE) && b.gain > 0.0)
    }
}

/// Best `Σ children sum² / weight` and its threshold over one presorted
/// segment, single-output case.
fn scan_single_output(
    column: &[f64],
    seg: &[u32],
    weights: &[f64],
    weighted_targets: &[f64],
    node: &NodeStats,
    min_leaf: f64,
) -> Option<(f64, f64)> {
    let total = node.sums[0];
    let mut best: Option<(f64, f64)> = None;
    let (mut left_w, mut left_sum) = (0.0, 0.0);
    let mut here = column[seg[0] as usize];
    for pair in seg.windows(2) {
        let r = pair[0] as usize;
        left_w += weights[r];
        left_sum += weighted_targets[r];
        let next = column[pair[1] as usize];
        let prev = std::mem::replace(&mut here, next);
        let right_w = node.weight - left_w;
        if prev == next || left_w < min_leaf || right_w < min_leaf {
            continue;
        }
        let right_sum = total - left_sum;
        let children = left_sum * left_sum / left_w + right_sum * right_sum / right_w;
        if best.map_or(true, |(b, _)| children > b) {
            best = Some((children, prev + (next - prev) / 2.0));
        }
    }
    best
}
