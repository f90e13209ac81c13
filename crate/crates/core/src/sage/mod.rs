//! GraphSAGE classifier with plain and label-weighted mean aggregators.
//!
//! Each layer replaces a node's vector by the weighted mean of itself
//! (weight 1) and its sampled neighbours, applies a linear map and a
//! nonlinearity, and L2-normalizes the result. Neighbour weights come from
//! the [`WeightPolicy`](crate::hierarchy::WeightPolicy) of the model: all ones
//! for MEAN, label-similarity weights for WMEAN-1 and WMEAN-2.

mod checkpoint;
mod metrics;
mod model;
mod sample;
mod search;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use metrics::{ClassScores, Metrics};
pub use model::{
    aggregate, aggregate_with_center_weight, softmax, Activation, ClassIndex, ForwardCache, ModelSpec, SageModel,
    WeightContext,
};
pub use sample::{sample_neighbourhood, NeighbourhoodSample, SampleFanout};
pub use search::{grid_search, run_entry, Experiment, GridEntry, LeaderboardRow, SearchResult};
pub use train::{evaluate, mean_loss, predict, train, GraphData, TrainConfig, TrainReport};
