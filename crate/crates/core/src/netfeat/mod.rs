//! Hand-crafted structural descriptors: degree, degree-balance
//! assortativity, betweenness centrality and Louvain communities.

mod assortativity;
mod betweenness;
mod louvain;

pub use assortativity::assortativity;
pub use betweenness::{betweenness, betweenness_with, BetweennessConfig};
pub use louvain::{louvain, modularity, one_hot_communities, Partition};

use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::graph::Graph;

pub fn degree_column(g: &Graph) -> Result<FeatureMatrix> {
    let d: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    FeatureMatrix::column("degree", &d)
}

pub fn assortativity_column(g: &Graph) -> Result<FeatureMatrix> {
    FeatureMatrix::column("assortativity", &assortativity(g))
}

pub fn betweenness_column(g: &Graph, cfg: &BetweennessConfig) -> Result<FeatureMatrix> {
    FeatureMatrix::column("betweenness", &betweenness_with(g, cfg))
}
