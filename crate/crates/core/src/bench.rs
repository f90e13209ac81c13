//! End-to-end aggregator comparison on synthetic data: generate, keep the
//! largest component, split, build features, then train and score MEAN,
//! WMEAN-1 and WMEAN-2 with identical settings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::embed::{embed_graph, SkipGramConfig, WalkConfig};
use crate::error::{Error, Result};
use crate::features::{assemble_features, format_g, FeatureMatrix};
use crate::hierarchy::WeightKind;
use crate::netfeat::{self, BetweennessConfig};
use crate::sage::{run_entry, Experiment, GridEntry, TrainConfig};
use crate::split::{build_split_graphs, make_split, Role, SplitConfig};
use crate::synth::{generate, group_attributes, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSet {
    pub degree: bool,
    pub assortativity: bool,
    pub betweenness: bool,
    /// Column budget of the community one-hot; `None` disables it.
    pub louvain: Option<usize>,
    pub embedding: Option<(WalkConfig, SkipGramConfig)>,
    /// Probability the group attribute is correct; `None` disables it.
    pub attribute_accuracy: Option<f64>,
}

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet {
            degree: true,
            assortativity: true,
            betweenness: true,
            louvain: Some(16),
            embedding: Some((
                WalkConfig {
                    length: 40,
                    walks_per_node: 10,
                },
                SkipGramConfig {
                    dim: 32,
                    epochs: 1,
                    ..SkipGramConfig::default()
                },
            )),
            attribute_accuracy: Some(0.8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub synth: SynthConfig,
    pub seeds: Vec<u64>,
    pub split: SplitConfig,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub features: FeatureSet,
    pub aggregators: Vec<WeightKind>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            synth: SynthConfig::default(),
            seeds: vec![0],
            split: SplitConfig::default(),
            hidden: vec![32, 32],
            train: TrainConfig::default(),
            features: FeatureSet::default(),
            aggregators: vec![WeightKind::Uniform, WeightKind::Wmean1, WeightKind::Wmean2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub split_attempt: usize,
    pub feature_dim: usize,
    /// Validation and test micro-F1 per aggregator, in config order.
    pub scores: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub aggregator: String,
    pub val_micro_f1: f64,
    pub test_micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Scores averaged over seeds.
    pub rows: Vec<BenchRow>,
    pub runs: Vec<SeedRun>,
}

impl BenchReport {
    pub fn row(&self, aggregator: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.aggregator == aggregator)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "aggregator\tval_micro_f1\ttest_micro_f1")?;
        for r in &self.rows {
            writeln!(w, "{}\t{}\t{}", r.aggregator, format_g(r.val_micro_f1, 6), format_g(r.test_micro_f1, 6))?;
        }
        Ok(())
    }
}

/// Generated dataset restricted to its largest component.
pub fn bench_dataset(synth: &SynthConfig, seed: u64) -> Result<Dataset> {
    let s = generate(&SynthConfig { seed, ..synth.clone() })?;
    Ok(Dataset::from_synth(s)?.largest_component()?.0)
}

/// Structural and attribute features computed on `g`, standardized over `train_rows`.
pub fn build_features(d: &Dataset, g: &crate::graph::Graph, set: &FeatureSet, train_rows: &[usize], seed: u64) -> Result<FeatureMatrix> {
    let mut parts = Vec::new();
    if set.degree {
        parts.push(netfeat::degree_column(g)?);
    }
    if set.assortativity {
        parts.push(netfeat::assortativity_column(g)?);
    }
    if set.betweenness {
        parts.push(netfeat::betweenness_column(g, &BetweennessConfig::for_graph(g, seed))?);
    }
    if let Some(k) = set.louvain {
        parts.push(netfeat::one_hot_communities(&netfeat::louvain(g, seed), k)?);
    }
    if let Some((walks, sg)) = &set.embedding {
        let sg = SkipGramConfig { seed, ..*sg };
        parts.push(embed_graph(g, walks, &sg)?.table.to_features()?);
    }
    if let Some(acc) = set.attribute_accuracy {
        parts.push(group_attributes(&d.labels, &d.hierarchy, acc, seed)?);
    }
    if parts.is_empty() {
        return Err(Error::Config("bench needs at least one feature block".into()));
    }
    assemble_features(&parts, Some(train_rows))
}

/// One seed of the comparison.
pub fn run_seed(cfg: &BenchConfig, seed: u64) -> Result<SeedRun> {
    let d = bench_dataset(&cfg.synth, seed)?;
    let split = make_split(&d.graph, &SplitConfig { seed, ..cfg.split })?;
    let graphs = build_split_graphs(&d.graph, &split)?;
    // Structure is read from the test-time graph, which every split role may see.
    let features = build_features(&d, &graphs.test.graph, &cfg.features, &split.nodes(Role::Train), seed)?;
    let exp = Experiment {
        graphs: &graphs,
        split: &split,
        features: features.values(),
        labels: &d.labels,
        hierarchy: &d.hierarchy,
    };
    let train = TrainConfig { seed, ..cfg.train.clone() };
    let scores = cfg
        .aggregators
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let entry = GridEntry::new(kind, cfg.hidden.clone(), train.clone());
            run_entry(&exp, &entry, i).map(|(row, _)| (row.val_micro_f1, row.test_micro_f1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedRun {
        seed,
        nodes: d.graph.node_count(),
        edges: d.graph.edge_count(),
        split_attempt: split.attempt,
        feature_dim: features.cols(),
        scores,
    })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.seeds.is_empty() {
        return Err(Error::Empty("bench seeds"));
    }
    if cfg.aggregators.is_empty() {
        return Err(Error::Empty("bench aggregators"));
    }
    let runs = cfg.seeds.iter().map(|&s| run_seed(cfg, s)).collect::<Result<Vec<_>>>()?;
    let k = runs.len() as f64;
    let rows = cfg
        .aggregators
        .iter()
        .enumerate()
        .map(|(i, &kind)| BenchRow {
            aggregator: GridEntry::new(kind, vec![], TrainConfig::default()).label(),
            val_micro_f1: runs.iter().map(|r| r.scores[i].0).sum::<f64>() / k,
            test_micro_f1: runs.iter().map(|r| r.scores[i].1).sum::<f64>() / k,
        })
        .collect();
    Ok(BenchReport { rows, runs })
}
