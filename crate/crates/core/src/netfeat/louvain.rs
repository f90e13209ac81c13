use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::{ColumnKind, FeatureMatrix};
use crate::graph::{Graph, NodeId};
use crate::rng;

/// Minimum modularity gain for a node to leave its community.
const MIN_GAIN: f64 = 1e-12;

/// Community id per node, dense in `0..count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    community: Vec<usize>,
    count: usize,
}

impl Partition {
    /// Relabels arbitrary ids densely in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = BTreeMap::new();
        let community = labels
            .iter()
            .map(|&l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            community,
            count: remap.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            community: (0..n).collect(),
            count: n,
        }
    }

    pub fn community(&self, u: NodeId) -> usize {
        self.community[u]
    }

    pub fn labels(&self) -> &[usize] {
        &self.community
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &c in &self.community {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Newman modularity `Σ_c [e_c/m − (deg_c/2m)²]`.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::NoEdges);
    }
    if p.community.len() != g.node_count() {
        return Err(Error::RowMismatch {
            expected: g.node_count(),
            found: p.community.len(),
        });
    }
    let mut internal = vec![0usize; p.count];
    let mut degree = vec![0usize; p.count];
    for u in 0..g.node_count() {
        degree[p.community[u]] += g.neighbors(u).len();
    }
    for (u, v) in g.edges() {
        if p.community[u] == p.community[v] {
            internal[p.community[u]] += 1;
        }
    }
    let m = m as f64;
    Ok((0..p.count)
        .map(|c| internal[c] as f64 / m - (degree[c] as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Weighted graph used at the coarser Louvain levels. `loops[i]` holds the
/// doubled weight of edges collapsed into node `i`.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
}

impl Level {
    fn from_graph(g: &Graph) -> Self {
        Level {
            adj: (0..g.node_count())
                .map(|u| g.neighbors(u).iter().map(|&v| (v, 1.0)).collect())
                .collect(),
            loops: vec![0.0; g.node_count()],
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn strength(&self, i: usize) -> f64 {
        self.loops[i] + self.adj[i].iter().map(|&(_, w)| w).sum::<f64>()
    }

    /// Local moving phase. Returns the community of each node, dense in first-appearance order.
    fn local_moves(&self, two_m: f64, rng: &mut rng::Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let strength: Vec<f64> = (0..n).map(|i| self.strength(i)).collect();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut total = strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut links: BTreeMap<usize, f64> = BTreeMap::new();
        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let ki = strength[i];
                let own = comm[i];
                links.clear();
                for &(j, w) in &self.adj[i] {
                    *links.entry(comm[j]).or_insert(0.0) += w;
                }
                total[own] -= ki;
                let gain = |c: usize, k_in: f64| k_in - total[c] * ki / two_m;
                let stay = gain(own, links.get(&own).copied().unwrap_or(0.0));
                let mut best = own;
                let mut best_gain = stay;
                // BTreeMap iterates in increasing id, so `>` keeps the lowest id on ties.
                for (&c, &k_in) in &links {
                    let g = gain(c, k_in);
                    if c != own && g > best_gain + MIN_GAIN {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += ki;
                if best != own {
                    comm[i] = best;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        let dense = Partition::from_labels(&comm);
        (dense.community, moved_any)
    }

    fn aggregate(&self, comm: &[usize], count: usize) -> Level {
        let mut loops = vec![0.0; count];
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); count];
        for i in 0..self.len() {
            let ci = comm[i];
            loops[ci] += self.loops[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if ci == cj {
                    loops[ci] += w;
                } else {
                    *maps[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        Level {
            adj: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
            loops,
        }
    }
}

/// Multi-level Louvain modularity optimisation; returns the coarsest level.
///
/// Local moves take the community with the highest gain, the lowest id on
/// ties, and only when strictly better than staying. Node visiting order is a
/// seeded shuffle, so the result is a pure function of `(g, seed)`.
pub fn louvain(g: &Graph, seed: u64) -> Partition {
    let n = g.node_count();
    if g.edge_count() == 0 {
        return Partition::singletons(n);
    }
    let two_m = 2.0 * g.edge_count() as f64;
    let mut rng = rng::stream(seed, rng::LOUVAIN);
    let mut level = Level::from_graph(g);
    let mut membership: Vec<usize> = (0..n).collect();
    loop {
        let (comm, moved) = level.local_moves(two_m, &mut rng);
        if !moved {
            break;
        }
        let count = comm.iter().max().map_or(0, |&c| c + 1);
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        if count == level.len() {
            break;
        }
        level = level.aggregate(&comm, count);
    }
    Partition::from_labels(&membership)
}

/// One indicator column per community, largest communities first.
///
/// When there are more than `max_k` communities, the `max_k − 1` largest keep
/// their own column and the rest share a final `comm_other` column. Fewer
/// communities leave trailing zero columns.
pub fn one_hot_communities(p: &Partition, max_k: usize) -> Result<FeatureMatrix> {
    if max_k == 0 {
        return Err(Error::Config("max_k must be at least 1".into()));
    }
    let sizes = p.sizes();
    let mut ranked: Vec<usize> = (0..p.count).collect();
    ranked.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let overflow = p.count > max_k;
    let own = if overflow { max_k - 1 } else { p.count };
    let mut column = vec![max_k - 1; p.count];
    for (rank, &c) in ranked.iter().take(own).enumerate() {
        column[c] = rank;
    }
    let mut values = Array2::zeros((p.community.len(), max_k));
    for (u, &c) in p.community.iter().enumerate() {
        values[[u, column[c]]] = 1.0;
    }
    let mut names: Vec<String> = (0..max_k).map(|i| format!("comm_{i}")).collect();
    if overflow {
        names[max_k - 1] = "comm_other".into();
    }
    FeatureMatrix::new(names, vec![ColumnKind::OneHot; max_k], values)
}
