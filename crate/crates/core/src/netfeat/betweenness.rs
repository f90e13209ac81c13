use std::collections::VecDeque;

use rand::seq::index::sample;

use crate::graph::{Graph, NodeId};
use crate::rng;

/// Sources processed per work unit. Fixed so the floating-point reduction order
/// does not depend on the number of worker threads.
const CHUNK: usize = 64;

/// Node count above which [`BetweennessConfig::for_graph`] switches to pivots.
pub const EXACT_LIMIT: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BetweennessConfig {
    /// Divide by the number of unordered pairs not containing the node.
    pub normalized: bool,
    /// Use this many sampled sources and scale by `n / pivots`; `None` is exact.
    pub pivots: Option<usize>,
    pub seed: u64,
}

impl BetweennessConfig {
    /// Exact on graphs up to [`EXACT_LIMIT`] nodes, 1000 pivots beyond.
    pub fn for_graph(g: &Graph, seed: u64) -> Self {
        BetweennessConfig {
            pivots: (g.node_count() > EXACT_LIMIT).then_some(1000),
            seed,
            ..Default::default()
        }
    }
}

/// Exact, unnormalized betweenness over unordered pairs.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    betweenness_with(g, &BetweennessConfig::default())
}

pub fn betweenness_with(g: &Graph, cfg: &BetweennessConfig) -> Vec<f64> {
    let n = g.node_count();
    let (sources, scale): (Vec<NodeId>, f64) = match cfg.pivots {
        Some(k) if k < n => {
            let mut r = rng::stream(cfg.seed, "betweenness");
            let mut s = sample(&mut r, n, k).into_vec();
            s.sort_unstable();
            (s, n as f64 / k as f64)
        }
        _ => ((0..n).collect(), 1.0),
    };
    let chunks: Vec<&[NodeId]> = sources.chunks(CHUNK).collect();
    let partials = map_chunks(&chunks, |chunk| {
        let mut acc = vec![0.0; n];
        let mut work = Workspace::new(n);
        for &s in chunk {
            work.accumulate(g, s, &mut acc);
        }
        acc
    });
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    // Each unordered pair was visited from both endpoints.
    let mut factor = scale / 2.0;
    if cfg.normalized && n > 2 {
        factor /= ((n - 1) * (n - 2)) as f64 / 2.0;
    }
    total.iter_mut().for_each(|b| *b *= factor);
    total
}

#[cfg(feature = "parallel")]
fn map_chunks<F>(chunks: &[&[NodeId]], f: F) -> Vec<Vec<f64>>
where
    F: Fn(&[NodeId]) -> Vec<f64> + Sync,
{
    use rayon::prelude::*;
    chunks.par_iter().map(|c| f(c)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<F>(chunks: &[&[NodeId]], f: F) -> Vec<Vec<f64>>
where
    F: Fn(&[NodeId]) -> Vec<f64>,
{
    chunks.iter().map(|c| f(c)).collect()
}

/// Per-source Brandes buffers, reused across sources.
struct Workspace {
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    order: Vec<NodeId>,
    queue: VecDeque<NodeId>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    fn accumulate(&mut self, g: &Graph, s: NodeId, acc: &mut [f64]) {
        for &v in &self.order {
            self.sigma[v] = 0.0;
            self.dist[v] = -1;
            self.delta[v] = 0.0;
        }
        self.order.clear();
        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for &w in g.neighbors(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                }
            }
        }
        // Predecessors of w are the neighbours one level closer to s.
        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in g.neighbors(w) {
                if self.dist[v] == self.dist[w] - 1 {
                    self.delta[v] += self.sigma[v] * coeff;
                }
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}
