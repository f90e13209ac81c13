//! Unsupervised node embeddings: uniform random walks fed to a skip-gram
//! model trained with negative sampling.

use ndarray::{Array2, ArrayView1};
use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{Graph, NodeId};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<NodeId>>,
    pub length: usize,
    pub walks_per_node: usize,
    /// Node count of the source graph.
    pub nodes: usize,
}

impl WalkCorpus {
    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

/// `walks_per_node` walks of `length` nodes from every node with an edge.
///
/// Walk `i` of node `u` draws from its own sub-stream, so the corpus does not
/// depend on how the work is scheduled.
pub fn random_walks(g: &Graph, length: usize, walks_per_node: usize, seed: u64) -> Result<WalkCorpus> {
    if length < 2 {
        return Err(Error::Config(format!("walk length must be at least 2, got {length}")));
    }
    let starts: Vec<NodeId> = (0..g.node_count()).filter(|&u| !g.neighbors(u).is_empty()).collect();
    let walk_from = |u: NodeId| -> Vec<Vec<NodeId>> {
        (0..walks_per_node)
            .map(|i| {
                let mut r = rng::indexed_stream(seed, rng::WALKS, (u * walks_per_node + i) as u64);
                let mut walk = Vec::with_capacity(length);
                walk.push(u);
                let mut at = u;
                while walk.len() < length {
                    let nb = g.neighbors(at);
                    if nb.is_empty() {
                        break;
                    }
                    at = nb[r.gen_range(0..nb.len())];
                    walk.push(at);
                }
                walk
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let walks: Vec<Vec<NodeId>> = {
        use rayon::prelude::*;
        starts.par_iter().flat_map_iter(|&u| walk_from(u)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let walks: Vec<Vec<NodeId>> = starts.iter().flat_map(|&u| walk_from(u)).collect();
    Ok(WalkCorpus {
        walks,
        length,
        walks_per_node,
        nodes: g.node_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to 1e-4 of itself.
    pub lr: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 128,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            seed: 0,
        }
    }
}

/// Walk parameters used by [`embed_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub length: usize,
    pub walks_per_node: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            length: 40,
            walks_per_node: 10,
        }
    }
}

/// `n × dim` embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub vectors: Array2<f64>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, u: NodeId) -> ArrayView1<'_, f64> {
        self.vectors.row(u)
    }

    pub fn cosine(&self, u: NodeId, v: NodeId) -> f64 {
        let (a, b) = (self.vector(u), self.vector(v));
        let denom = a.dot(&a).sqrt() * b.dot(&b).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            a.dot(&b) / denom
        }
    }

    /// Columns `emb_0 .. emb_{dim-1}`.
    pub fn to_features(&self) -> Result<FeatureMatrix> {
        FeatureMatrix::with_prefix("emb", self.vectors.clone())
    }
}

#[derive(Debug, Clone)]
pub struct SkipGramOutput {
    pub table: EmbeddingTable,
    /// Mean negative-sampling loss per positive pair, one entry per epoch.
    pub epoch_loss: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Trains skip-gram with negative sampling on `corpus`.
///
/// Noise nodes are drawn proportionally to `frequency^0.75`, where the
/// frequency is the node's occurrence count in the corpus. Training is
/// sequential and fully determined by `cfg.seed`.
pub fn train_skipgram(corpus: &WalkCorpus, cfg: &SkipGramConfig) -> Result<SkipGramOutput> {
    if corpus.is_empty() {
        return Err(Error::Empty("walk corpus"));
    }
    if cfg.dim == 0 || cfg.window == 0 {
        return Err(Error::Config("dim and window must be positive".into()));
    }
    let n = corpus.nodes;
    let dim = cfg.dim;
    let mut r = rng::stream(cfg.seed, rng::SKIPGRAM);
    let init = Uniform::new(-0.5 / dim as f64, 0.5 / dim as f64);
    let mut input: Vec<f64> = (0..n * dim).map(|_| init.sample(&mut r)).collect();
    let mut output = vec![0.0; n * dim];

    let mut freq = vec![0.0f64; n];
    for w in &corpus.walks {
        for &u in w {
            freq[u] += 1.0;
        }
    }
    let noise = WeightedIndex::new(freq.iter().map(|f| f.powf(0.75))).map_err(|e| Error::Config(e.to_string()))?;

    let total_steps = (cfg.epochs * corpus.tokens()).max(1) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..corpus.walks.len()).collect();
    let mut grad = vec![0.0; dim];
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut r);
        let (mut loss, mut pairs) = (0.0, 0usize);
        for &wi in &order {
            let walk = &corpus.walks[wi];
            for (i, &center) in walk.iter().enumerate() {
                let lr = cfg.lr * (1.0 - step as f64 / total_steps).max(1e-4);
                step += 1;
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window + 1).min(walk.len());
                for (j, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let c_in = center * dim;
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            (noise.sample(&mut r), 0.0)
                        };
                        let t_out = target * dim;
                        let score: f64 = (0..dim).map(|d| input[c_in + d] * output[t_out + d]).sum();
                        let p = sigmoid(score);
                        loss -= if label == 1.0 { p.max(1e-12).ln() } else { (1.0 - p).max(1e-12).ln() };
                        let coeff = lr * (label - p);
                        for d in 0..dim {
                            grad[d] += coeff * output[t_out + d];
                            output[t_out + d] += coeff * input[c_in + d];
                        }
                    }
                    for d in 0..dim {
                        input[c_in + d] += grad[d];
                    }
                    pairs += 1;
                }
            }
        }
        epoch_loss.push(loss / pairs.max(1) as f64);
    }
    let vectors = Array2::from_shape_vec((n, dim), input).expect("n × dim");
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("skip-gram diverged; lower the learning rate".into()));
    }
    Ok(SkipGramOutput {
        table: EmbeddingTable { vectors },
        epoch_loss,
    })
}

/// Walks plus skip-gram in one call.
pub fn embed_graph(g: &Graph, walks: &WalkConfig, cfg: &SkipGramConfig) -> Result<SkipGramOutput> {
    let corpus = random_walks(g, walks.length, walks.walks_per_node, cfg.seed)?;
    train_skipgram(&corpus, cfg)
}
