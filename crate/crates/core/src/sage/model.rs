use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{ClassId, LabelHierarchy, LcaDistance, WeightKind, WeightPolicy};
use crate::rng;

use super::sample::NeighbourhoodSample;

/// Norm below which a hidden vector is left unnormalized.
const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Weighted mean of a center vector (weight 1) and its neighbours.
///
/// `(h_v + Σ w_u h_u) / (1 + Σ w_u)`; all-ones weights give the plain mean.
pub fn aggregate(center: ArrayView1<'_, f64>, neighbours: &[ArrayView1<'_, f64>], weights: &[f64]) -> Result<Array1<f64>> {
    aggregate_with_center_weight(center, 1.0, neighbours, weights)
}

/// Weighted mean with an explicit center weight.
pub fn aggregate_with_center_weight(
    center: ArrayView1<'_, f64>,
    center_weight: f64,
    neighbours: &[ArrayView1<'_, f64>],
    weights: &[f64],
) -> Result<Array1<f64>> {
    if neighbours.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} neighbours but {} weights",
            neighbours.len(),
            weights.len()
        )));
    }
    if let Some(h) = neighbours.iter().find(|h| h.len() != center.len()) {
        return Err(Error::Dimension(format!(
            "neighbour of length {} next to center of length {}",
            h.len(),
            center.len()
        )));
    }
    let mut acc = center.to_owned() * center_weight;
    let mut total = center_weight;
    for (h, &w) in neighbours.iter().zip(weights) {
        acc.scaled_add(w, h);
        total += w;
    }
    acc /= total;
    Ok(acc)
}

/// Everything the aggregators need to weight neighbours.
#[derive(Debug, Clone, Copy)]
pub struct WeightContext<'a> {
    pub hierarchy: &'a LabelHierarchy,
    /// Per node; `None` where the label is unknown or hidden.
    pub labels: &'a [Option<ClassId>],
}

/// Leaf classes in hierarchy order and the model's output index of each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassIndex {
    pub leaves: Vec<ClassId>,
    position: Vec<Option<usize>>,
}

impl ClassIndex {
    pub fn new(h: &LabelHierarchy) -> Self {
        let leaves = h.leaves();
        let mut position = vec![None; h.len()];
        for (i, &c) in leaves.iter().enumerate() {
            position[c] = Some(i);
        }
        ClassIndex { leaves, position }
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn index_of(&self, class: ClassId) -> Option<usize> {
        self.position.get(class).copied().flatten()
    }
}

/// Architecture and aggregation settings of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    /// Output width of each layer; its length is the layer count.
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub aggregator: WeightKind,
    #[serde(default = "default_unknown_weight")]
    pub unknown_label_weight: f64,
    #[serde(default)]
    pub lca_distance: LcaDistance,
    #[serde(default)]
    pub activation: Activation,
    /// L2-normalize hidden vectors after every layer.
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn default_unknown_weight() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

impl ModelSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, classes: usize, aggregator: WeightKind) -> Self {
        ModelSpec {
            input_dim,
            hidden,
            classes,
            aggregator,
            unknown_label_weight: 0.5,
            lca_distance: LcaDistance::Center,
            activation: Activation::Relu,
            normalize: true,
        }
    }

    pub fn policy(&self) -> WeightPolicy {
        WeightPolicy {
            kind: self.aggregator,
            unknown_label_weight: self.unknown_label_weight,
            lca_distance: self.lca_distance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::Config("a model needs at least one layer".into()));
        }
        if self.input_dim == 0 || self.classes == 0 || self.hidden.contains(&0) {
            return Err(Error::Config("layer widths and class count must be positive".into()));
        }
        self.policy().validate()
    }

    /// `(rows, cols)` of every parameter tensor: `W_1, b_1, …, W_K, b_K, W_head, b_head`.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        let mut fan_in = self.input_dim;
        for &out in self.hidden.iter().chain(std::iter::once(&self.classes)) {
            shapes.push((out, fan_in));
            shapes.push((1, out));
            fan_in = out;
        }
        shapes
    }

    pub fn parameter_count(&self) -> usize {
        self.shapes().iter().map(|(r, c)| r * c).sum()
    }
}

/// Stacked weighted-mean GraphSAGE layers followed by a linear softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct SageModel {
    pub spec: ModelSpec,
    /// `W_1, b_1, …, W_K, b_K, W_head, b_head`; weights are `out × in`, biases `1 × out`.
    pub params: Vec<Array2<f64>>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]`: raw features of sample level `l`.
    inputs: Vec<Array2<f64>>,
    /// `layers[k][l]` for layer `k` (0-based) and level `l`.
    layers: Vec<Vec<LayerCache>>,
    /// Neighbour weights per level.
    weights: Vec<Vec<f64>>,
    pub logits: Array2<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    agg: Array2<f64>,
    pre: Array2<f64>,
    out: Array2<f64>,
    norms: Array1<f64>,
}

impl SageModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut r = rng::stream(seed, rng::INIT);
        let params = spec
            .shapes()
            .into_iter()
            .enumerate()
            .map(|(i, (rows, cols))| {
                if i % 2 == 1 {
                    Array2::zeros((rows, cols))
                } else {
                    let limit = (6.0 / (rows + cols) as f64).sqrt();
                    let dist = Uniform::new_inclusive(-limit, limit);
                    Array2::from_shape_simple_fn((rows, cols), || dist.sample(&mut r))
                }
            })
            .collect();
        Ok(SageModel { spec, params })
    }

    pub fn layers(&self) -> usize {
        self.spec.hidden.len()
    }

    pub fn weight(&self, layer: usize) -> &Array2<f64> {
        &self.params[2 * layer]
    }

    pub fn head(&self) -> (&Array2<f64>, &Array2<f64>) {
        let k = self.layers();
        (&self.params[2 * k], &self.params[2 * k + 1])
    }

    fn level_weights(&self, sample: &NeighbourhoodSample, ctx: &WeightContext<'_>) -> Vec<Vec<f64>> {
        let policy = self.spec.policy();
        (0..sample.fanout.len())
            .map(|l| {
                let f = sample.fanout[l];
                let mut w = Vec::with_capacity(sample.levels[l + 1].len());
                for (p, &v) in sample.levels[l].iter().enumerate() {
                    let center = ctx.labels[v];
                    for &u in &sample.levels[l + 1][p * f..(p + 1) * f] {
                        w.push(policy.neighbour_weight(ctx.hierarchy, center, ctx.labels[u]));
                    }
                }
                w
            })
            .collect()
    }

    /// Class logits of the batch nodes, one row each.
    pub fn forward(&self, sample: &NeighbourhoodSample, features: &Array2<f64>, ctx: &WeightContext<'_>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(sample, features, ctx)?.logits)
    }

    pub fn forward_cached(
        &self,
        sample: &NeighbourhoodSample,
        features: &Array2<f64>,
        ctx: &WeightContext<'_>,
    ) -> Result<ForwardCache> {
        let k = self.layers();
        if sample.fanout.len() != k {
            return Err(Error::Dimension(format!(
                "sample has {} hops but the model has {k} layers",
                sample.fanout.len()
            )));
        }
        if features.ncols() != self.spec.input_dim {
            return Err(Error::Dimension(format!(
                "features have {} columns, model expects {}",
                features.ncols(),
                self.spec.input_dim
            )));
        }
        if ctx.labels.len() < features.nrows() {
            return Err(Error::RowMismatch {
                expected: features.nrows(),
                found: ctx.labels.len(),
            });
        }
        let inputs: Vec<Array2<f64>> = sample.levels.iter().map(|lvl| features.select(Axis(0), lvl)).collect();
        let weights = self.level_weights(sample, ctx);
        let mut layers: Vec<Vec<LayerCache>> = Vec::with_capacity(k);
        for layer in 0..k {
            let w = &self.params[2 * layer];
            let b = &self.params[2 * layer + 1];
            let mut out_levels = Vec::with_capacity(k - layer);
            for l in 0..(k - layer) {
                let (center, nbrs) = if layer == 0 {
                    (&inputs[l], &inputs[l + 1])
                } else {
                    (&layers[layer - 1][l].out, &layers[layer - 1][l + 1].out)
                };
                let z = mean_rows(center, nbrs, sample.fanout[l], &weights[l]);
                let mut pre = z.dot(&w.t());
                pre += &b.row(0);
                let mut out = pre.mapv(|x| self.spec.activation.apply(x));
                let mut norms = Array1::ones(out.nrows());
                if self.spec.normalize {
                    for (mut row, n) in out.rows_mut().into_iter().zip(norms.iter_mut()) {
                        let len = row.dot(&row).sqrt();
                        *n = len;
                        if len > NORM_FLOOR {
                            row /= len;
                        }
                    }
                }
                out_levels.push(LayerCache { agg: z, pre, out, norms });
            }
            layers.push(out_levels);
        }
        let (wh, bh) = self.head();
        let mut logits = layers[k - 1][0].out.dot(&wh.t());
        logits += &bh.row(0);
        Ok(ForwardCache {
            inputs,
            layers,
            weights,
            logits,
        })
    }

    /// Mean cross-entropy of the batch and its gradient for every parameter.
    pub fn loss_and_gradient(
        &self,
        sample: &NeighbourhoodSample,
        features: &Array2<f64>,
        ctx: &WeightContext<'_>,
        targets: &[usize],
    ) -> Result<(f64, Vec<Array2<f64>>)> {
        let cache = self.forward_cached(sample, features, ctx)?;
        let batch = targets.len();
        if batch != cache.logits.nrows() {
            return Err(Error::RowMismatch {
                expected: cache.logits.nrows(),
                found: batch,
            });
        }
        let probs = softmax(&cache.logits);
        let mut loss = 0.0;
        let mut d_logits = probs.clone();
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.spec.classes {
                return Err(Error::Dimension(format!("target class {t} out of range")));
            }
            loss -= probs[[i, t]].max(f64::MIN_POSITIVE).ln();
            d_logits[[i, t]] -= 1.0;
        }
        let scale = 1.0 / batch.max(1) as f64;
        loss *= scale;
        d_logits *= scale;

        let k = self.layers();
        let mut grads: Vec<Array2<f64>> = self.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        let (wh, _) = self.head();
        let top = &cache.layers[k - 1][0].out;
        grads[2 * k] = d_logits.t().dot(top);
        grads[2 * k + 1] = d_logits.sum_axis(Axis(0)).insert_axis(Axis(0));
        // Gradient w.r.t. the outputs of the current layer, one matrix per level.
        let mut d_out: Vec<Array2<f64>> = vec![d_logits.dot(wh)];
        for layer in (0..k).rev() {
            let w = &self.params[2 * layer];
            let levels = &cache.layers[layer];
            let (prev_rows, prev_dim): (Vec<usize>, usize) = if layer == 0 {
                (cache.inputs.iter().map(|a| a.nrows()).collect(), self.spec.input_dim)
            } else {
                (cache.layers[layer - 1].iter().map(|c| c.out.nrows()).collect(), self.spec.hidden[layer - 1])
            };
            let mut d_prev: Vec<Array2<f64>> = prev_rows.iter().map(|&r| Array2::zeros((r, prev_dim))).collect();
            for (l, lc) in levels.iter().enumerate() {
                let mut d_pre = d_out[l].clone();
                if self.spec.normalize {
                    for ((mut g, h), &n) in d_pre.rows_mut().into_iter().zip(lc.out.rows()).zip(lc.norms.iter()) {
                        if n > NORM_FLOOR {
                            let proj = h.dot(&g);
                            g.scaled_add(-proj, &h);
                            g /= n;
                        }
                    }
                }
                d_pre.zip_mut_with(&lc.pre, |g, &a| *g *= self.spec.activation.derivative(a));
                grads[2 * layer] += &d_pre.t().dot(&lc.agg);
                grads[2 * layer + 1] += &d_pre.sum_axis(Axis(0)).insert_axis(Axis(0));
                if layer == 0 {
                    continue;
                }
                let d_z = d_pre.dot(w);
                let f = sample.fanout[l];
                let wl = &cache.weights[l];
                for (p, dz) in d_z.rows().into_iter().enumerate() {
                    let ws = &wl[p * f..(p + 1) * f];
                    let total = 1.0 + ws.iter().sum::<f64>();
                    d_prev[l].row_mut(p).scaled_add(1.0 / total, &dz);
                    for (j, &wj) in ws.iter().enumerate() {
                        d_prev[l + 1].row_mut(p * f + j).scaled_add(wj / total, &dz);
                    }
                }
            }
            d_out = d_prev;
        }
        Ok((loss, grads))
    }
}

/// Row-wise weighted mean of each center with its `fanout` children.
fn mean_rows(center: &Array2<f64>, nbrs: &Array2<f64>, fanout: usize, weights: &[f64]) -> Array2<f64> {
    let mut z = center.clone();
    for (p, mut row) in z.rows_mut().into_iter().enumerate() {
        let ws = &weights[p * fanout..(p + 1) * fanout];
        let mut total = 1.0;
        for (j, &w) in ws.iter().enumerate() {
            row.scaled_add(w, &nbrs.row(p * fanout + j));
            total += w;
        }
        row /= total;
    }
    z
}

/// Row-wise softmax.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let s = row.sum();
        row /= s;
    }
    out
}
