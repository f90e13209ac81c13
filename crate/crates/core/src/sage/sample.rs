use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::Rng;

/// Neighbours drawn per node at each hop, nearest hop first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFanout(pub Vec<usize>);

impl Default for SampleFanout {
    fn default() -> Self {
        SampleFanout(vec![10, 25])
    }
}

impl SampleFanout {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        let f = SampleFanout(sizes);
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() || self.0.contains(&0) {
            return Err(Error::Config(format!("fanout sizes must be ≥ 1, got {:?}", self.0)));
        }
        Ok(())
    }

    pub fn hops(&self) -> usize {
        self.0.len()
    }

    /// Same sizes with the hop order reversed.
    pub fn reversed(&self) -> Self {
        SampleFanout(self.0.iter().rev().copied().collect())
    }
}

/// Layered neighbourhood sample.
///
/// `levels[0]` is the batch. The children of position `p` of `levels[l]`
/// occupy `levels[l + 1][p * fanout[l] .. (p + 1) * fanout[l]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighbourhoodSample {
    pub levels: Vec<Vec<NodeId>>,
    pub fanout: Vec<usize>,
}

impl NeighbourhoodSample {
    pub fn batch(&self) -> &[NodeId] {
        &self.levels[0]
    }

    pub fn children(&self, level: usize, pos: usize) -> &[NodeId] {
        let f = self.fanout[level];
        &self.levels[level + 1][pos * f..(pos + 1) * f]
    }
}

/// Samples `fanout[l]` neighbours for every node of level `l`.
///
/// Nodes with at least `fanout[l]` neighbours get a uniform sample without
/// replacement; smaller neighbourhoods are drawn with replacement; isolated
/// nodes reference themselves.
pub fn sample_neighbourhood(g: &Graph, batch: &[NodeId], fanout: &SampleFanout, rng: &mut Rng) -> Result<NeighbourhoodSample> {
    fanout.validate()?;
    let n = g.node_count();
    if let Some(&bad) = batch.iter().find(|&&u| u >= n) {
        return Err(Error::NodeOutOfRange { node: bad, n });
    }
    let mut levels = vec![batch.to_vec()];
    for &f in &fanout.0 {
        let frontier = levels.last().unwrap();
        let mut next = Vec::with_capacity(frontier.len() * f);
        for &u in frontier {
            let nb = g.neighbors(u);
            if nb.is_empty() {
                next.extend(std::iter::repeat_n(u, f));
            } else if nb.len() >= f {
                for i in rand::seq::index::sample(rng, nb.len(), f) {
                    next.push(nb[i]);
                }
            } else {
                next.extend((0..f).map(|_| nb[rng.gen_range(0..nb.len())]));
            }
        }
        levels.push(next);
    }
    Ok(NeighbourhoodSample {
        levels,
        fanout: fanout.0.clone(),
    })
}
