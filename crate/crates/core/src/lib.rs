//! Node classification with hierarchy-aware GraphSAGE aggregators.
//!
//! The crate covers the whole pipeline: graph storage and IO, structural
//! descriptors, label hierarchies, inductive train/validation/test splits,
//! random-walk embeddings, the GraphSAGE model with MEAN and label-weighted
//! mean aggregators, neighbourhood-label statistics and a synthetic data
//! generator.

pub mod analysis;
pub mod bench;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod features;
pub mod graph;
pub mod hierarchy;
pub mod netfeat;
pub mod rng;
pub mod sage;
pub mod split;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use hierarchy::{ClassId, LabelHierarchy};
