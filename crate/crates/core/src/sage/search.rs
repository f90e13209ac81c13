use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{ClassId, LabelHierarchy, WeightKind};
use crate::split::{Role, SplitAssignment, SplitGraphs};

use super::model::{ClassIndex, ModelSpec, SageModel};
use super::train::{evaluate, train, GraphData, TrainConfig};

/// One point of the search grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub aggregator: WeightKind,
    pub hidden: Vec<usize>,
    #[serde(default = "default_unknown")]
    pub unknown_label_weight: f64,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_unknown() -> f64 {
    0.5
}

impl GridEntry {
    pub fn new(aggregator: WeightKind, hidden: Vec<usize>, train: TrainConfig) -> Self {
        GridEntry {
            name: None,
            aggregator,
            hidden,
            unknown_label_weight: 0.5,
            train,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| match self.aggregator {
            WeightKind::Uniform => "MEAN".into(),
            WeightKind::Wmean1 => "WMEAN-1".into(),
            WeightKind::Wmean2 => "WMEAN-2".into(),
        })
    }

    pub fn model_spec(&self, input_dim: usize, classes: usize) -> ModelSpec {
        ModelSpec {
            unknown_label_weight: self.unknown_label_weight,
            ..ModelSpec::new(input_dim, self.hidden.clone(), classes, self.aggregator)
        }
    }
}

/// Inputs shared by every grid point.
#[derive(Debug, Clone, Copy)]
pub struct Experiment<'a> {
    pub graphs: &'a SplitGraphs,
    pub split: &'a SplitAssignment,
    pub features: &'a Array2<f64>,
    pub labels: &'a [Option<ClassId>],
    pub hierarchy: &'a LabelHierarchy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub index: usize,
    pub label: String,
    pub parameters: usize,
    pub val_micro_f1: f64,
    pub test_micro_f1: f64,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Ranked by validation micro-F1, then fewer parameters, then grid index.
    pub leaderboard: Vec<LeaderboardRow>,
    pub best: GridEntry,
}

/// Trains one grid point on the training graph and scores it on the
/// validation and test graphs.
pub fn run_entry(exp: &Experiment<'_>, entry: &GridEntry, index: usize) -> Result<(LeaderboardRow, SageModel)> {
    let classes = ClassIndex::new(exp.hierarchy);
    let spec = entry.model_spec(exp.features.ncols(), classes.len());
    let parameters = spec.parameter_count();
    let mut model = SageModel::new(spec, entry.train.seed)?;
    let data = |graph| GraphData {
        graph,
        features: exp.features,
        labels: exp.labels,
        hierarchy: exp.hierarchy,
        classes: &classes,
    };
    let report = train(&mut model, &data(&exp.graphs.train.graph), &exp.split.nodes(Role::Train), &entry.train)?;
    let val = evaluate(&model, &data(&exp.graphs.val.graph), &exp.split.nodes(Role::Val), &entry.train.fanout, entry.train.seed)?;
    let test = evaluate(&model, &data(&exp.graphs.test.graph), &exp.split.nodes(Role::Test), &entry.train.fanout, entry.train.seed)?;
    Ok((
        LeaderboardRow {
            index,
            label: entry.label(),
            parameters,
            val_micro_f1: val.micro_f1,
            test_micro_f1: test.micro_f1,
            final_loss: report.loss_history.last().copied(),
        },
        model,
    ))
}

/// Deterministic grid search.
///
/// Selection looks at validation scores only; the test column is reported for
/// every row so aggregators can be compared side by side.
pub fn grid_search(exp: &Experiment<'_>, grid: &[GridEntry]) -> Result<SearchResult> {
    if grid.is_empty() {
        return Err(Error::Empty("search grid"));
    }
    let mut leaderboard = grid
        .iter()
        .enumerate()
        .map(|(i, e)| run_entry(exp, e, i).map(|(row, _)| row))
        .collect::<Result<Vec<_>>>()?;
    leaderboard.sort_by(|a, b| {
        b.val_micro_f1
            .total_cmp(&a.val_micro_f1)
            .then(a.parameters.cmp(&b.parameters))
            .then(a.index.cmp(&b.index))
    });
    let best = grid[leaderboard[0].index].clone();
    Ok(SearchResult { leaderboard, best })
}
