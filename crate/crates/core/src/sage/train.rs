use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::hierarchy::{ClassId, LabelHierarchy};
use crate::rng;

use super::metrics::Metrics;
use super::model::{softmax, ClassIndex, SageModel, WeightContext};
use super::sample::{sample_neighbourhood, SampleFanout};

const MONITOR: &str = "monitor";
const EVAL: &str = "eval";
const EVAL_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub fanout: SampleFanout,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 64,
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            seed: 0,
            fanout: SampleFanout::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be finite and ≥ 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        self.fanout.validate()
    }
}

/// Graph, inputs and labels a model trains or predicts on.
#[derive(Debug, Clone, Copy)]
pub struct GraphData<'a> {
    pub graph: &'a Graph,
    pub features: &'a Array2<f64>,
    /// Ground-truth leaf class per node, where known.
    pub labels: &'a [Option<ClassId>],
    pub hierarchy: &'a LabelHierarchy,
    pub classes: &'a ClassIndex,
}

impl GraphData<'_> {
    fn target(&self, u: NodeId) -> Result<usize> {
        self.labels
            .get(u)
            .copied()
            .flatten()
            .and_then(|c| self.classes.index_of(c))
            .ok_or_else(|| Error::Config(format!("node {u} has no leaf label")))
    }

    /// Labels visible to the aggregators: everything except `hidden`.
    fn visible_labels(&self, hidden: &[NodeId]) -> Vec<Option<ClassId>> {
        let mut labels = self.labels.to_vec();
        for &u in hidden {
            labels[u] = None;
        }
        labels
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean cross-entropy over all training nodes after each epoch, on a fixed
    /// neighbourhood sample.
    pub loss_history: Vec<f64>,
    /// Mean of the mini-batch losses seen during each epoch.
    pub batch_loss: Vec<f64>,
}

struct Adam {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: i32,
}

impl Adam {
    fn new(params: &[Array2<f64>]) -> Self {
        Adam {
            m: params.iter().map(|p| Array2::zeros(p.raw_dim())).collect(),
            v: params.iter().map(|p| Array2::zeros(p.raw_dim())).collect(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [Array2<f64>], grads: &[Array2<f64>], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            // Decay applies to weights only, not biases.
            let decay = if i % 2 == 0 { cfg.weight_decay } else { 0.0 };
            ndarray::Zip::from(p)
                .and(g)
                .and(&mut self.m[i])
                .and(&mut self.v[i])
                .for_each(|p, &g, m, v| {
                    let g = g + decay * *p;
                    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                    *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
                });
        }
    }
}

/// Mean cross-entropy of `nodes` with their own labels hidden from the aggregators.
pub fn mean_loss(model: &SageModel, data: &GraphData<'_>, nodes: &[NodeId], fanout: &SampleFanout, rng: &mut rng::Rng) -> Result<f64> {
    if nodes.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for batch in nodes.chunks(EVAL_BATCH) {
        let sample = sample_neighbourhood(data.graph, batch, fanout, rng)?;
        let labels = data.visible_labels(batch);
        let ctx = WeightContext {
            hierarchy: data.hierarchy,
            labels: &labels,
        };
        let probs = softmax(&model.forward(&sample, data.features, &ctx)?);
        for (i, &u) in batch.iter().enumerate() {
            total -= probs[[i, data.target(u)?]].max(f64::MIN_POSITIVE).ln();
        }
    }
    Ok(total / nodes.len() as f64)
}

/// Mini-batch Adam on the cross-entropy of `train_nodes`.
///
/// Each batch hides its own nodes' labels from the aggregators, so the
/// center weights at training time match what unseen nodes get at
/// evaluation. Every draw comes from sub-streams of `cfg.seed`.
pub fn train(model: &mut SageModel, data: &GraphData<'_>, train_nodes: &[NodeId], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if cfg.fanout.hops() != model.layers() {
        return Err(Error::Config(format!(
            "fanout has {} hops but the model has {} layers",
            cfg.fanout.hops(),
            model.layers()
        )));
    }
    let targets: Vec<usize> = train_nodes.iter().map(|&u| data.target(u)).collect::<Result<_>>()?;
    let mut adam = Adam::new(&model.params);
    let mut order: Vec<usize> = (0..train_nodes.len()).collect();
    let mut sampling = rng::stream(cfg.seed, rng::SAMPLING);
    let mut shuffle = rng::stream(cfg.seed, rng::SHUFFLE);
    let mut labels = data.labels.to_vec();
    let mut report = TrainReport {
        loss_history: Vec::with_capacity(cfg.epochs),
        batch_loss: Vec::with_capacity(cfg.epochs),
    };
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let (mut sum, mut batches) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<NodeId> = chunk.iter().map(|&i| train_nodes[i]).collect();
            let batch_targets: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let sample = sample_neighbourhood(data.graph, &batch, &cfg.fanout, &mut sampling)?;
            for &u in &batch {
                labels[u] = None;
            }
            let ctx = WeightContext {
                hierarchy: data.hierarchy,
                labels: &labels,
            };
            let (loss, grads) = model.loss_and_gradient(&sample, data.features, &ctx, &batch_targets)?;
            for &u in &batch {
                labels[u] = data.labels[u];
            }
            if !loss.is_finite() || grads.iter().any(|g| g.iter().any(|x| !x.is_finite())) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    grad_norms: grads.iter().map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt()).collect(),
                });
            }
            adam.step(&mut model.params, &grads, cfg);
            sum += loss;
            batches += 1;
        }
        report.batch_loss.push(sum / batches.max(1) as f64);
        let mut monitor = rng::stream(cfg.seed, MONITOR);
        report.loss_history.push(mean_loss(model, data, train_nodes, &cfg.fanout, &mut monitor)?);
    }
    Ok(report)
}

/// Most likely class index of every node in `nodes`.
///
/// The labels of `nodes` themselves are hidden from the aggregators. Batch
/// `i` samples from the `i`-th evaluation sub-stream of `seed`.
pub fn predict(model: &SageModel, data: &GraphData<'_>, nodes: &[NodeId], fanout: &SampleFanout, seed: u64) -> Result<Vec<usize>> {
    let labels = data.visible_labels(nodes);
    let run = |(b, batch): (usize, &[NodeId])| -> Result<Vec<usize>> {
        let mut r = rng::indexed_stream(seed, EVAL, b as u64);
        let sample = sample_neighbourhood(data.graph, batch, fanout, &mut r)?;
        let ctx = WeightContext {
            hierarchy: data.hierarchy,
            labels: &labels,
        };
        let logits = model.forward(&sample, data.features, &ctx)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
                    .0
            })
            .collect())
    };
    let batches: Vec<(usize, &[NodeId])> = nodes.chunks(EVAL_BATCH).enumerate().collect();
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Vec<usize>>> = {
        use rayon::prelude::*;
        batches.into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Vec<usize>>> = batches.into_iter().map(run).collect();
    let mut out = Vec::with_capacity(nodes.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Micro-F1 and per-class scores on `eval_nodes`, predicted over `data.graph`.
pub fn evaluate(model: &SageModel, data: &GraphData<'_>, eval_nodes: &[NodeId], fanout: &SampleFanout, seed: u64) -> Result<Metrics> {
    let truth: Vec<usize> = eval_nodes.iter().map(|&u| data.target(u)).collect::<Result<_>>()?;
    let predicted = predict(model, data, eval_nodes, fanout, seed)?;
    let names: Vec<String> = data.classes.leaves.iter().map(|&c| data.hierarchy.name(c).to_owned()).collect();
    Metrics::from_predictions(&predicted, &truth, &names)
}
