use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hiersage::bench::{run_bench, BenchConfig};
use hiersage::dataset::Dataset;
use hiersage::features::format_g;
use hiersage::hierarchy::WeightKind;
use hiersage::sage::{
    evaluate, grid_search, load_checkpoint, predict, save_checkpoint, train as fit, ClassIndex, Experiment, GraphData,
    GridEntry, SageModel, SampleFanout, TrainConfig,
};
use hiersage::split::{build_split_graphs, Role, SplitAssignment, SplitGraphs};
use ndarray::Array2;
use serde::Serialize;
use serde_json::json;

use super::table;
use crate::input;
use crate::output::Artifacts;
use crate::Ctx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Aggregator {
    Mean,
    Wmean1,
    Wmean2,
}

impl From<Aggregator> for WeightKind {
    fn from(a: Aggregator) -> Self {
        match a {
            Aggregator::Mean => WeightKind::Uniform,
            Aggregator::Wmean1 => WeightKind::Wmean1,
            Aggregator::Wmean2 => WeightKind::Wmean2,
        }
    }
}

/// Dataset, input features and split shared by train, eval and search.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Feature TSV with one row per node, in node table order.
    #[arg(long)]
    features: PathBuf,
    /// Split file.
    #[arg(long)]
    split: PathBuf,
}

struct Loaded {
    d: Dataset,
    features: Array2<f64>,
    split: SplitAssignment,
    graphs: SplitGraphs,
    classes: ClassIndex,
}

impl ExperimentArgs {
    fn load(&self) -> Result<Loaded> {
        let d = input::load_dataset(&self.data)?;
        let n = d.graph.node_count();
        let features = input::load_features(&self.features, n)?.into_values();
        let split = input::load_split(&self.split, n)?;
        let graphs = build_split_graphs(&d.graph, &split)?;
        let classes = ClassIndex::new(&d.hierarchy);
        for role in [Role::Train, Role::Val, Role::Test] {
            if let Some(&u) = split.nodes(role).iter().find(|&&u| d.labels[u].is_none()) {
                bail!("{} node `{}` has no label", role.as_str(), d.nodes.name(u));
            }
        }
        Ok(Loaded {
            d,
            features,
            split,
            graphs,
            classes,
        })
    }

    fn describe(&self) -> serde_json::Value {
        json!({ "data": self.data, "features": self.features, "split": self.split })
    }
}

impl Loaded {
    fn data(&self, role: Role) -> GraphData<'_> {
        let graph = match role {
            Role::Train => &self.graphs.train.graph,
            Role::Val => &self.graphs.val.graph,
            Role::Test => &self.graphs.test.graph,
        };
        GraphData {
            graph,
            features: &self.features,
            labels: &self.d.labels,
            hierarchy: &self.d.hierarchy,
            classes: &self.classes,
        }
    }

    fn experiment(&self) -> Experiment<'_> {
        Experiment {
            graphs: &self.graphs,
            split: &self.split,
            features: &self.features,
            labels: &self.d.labels,
            hierarchy: &self.d.hierarchy,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// JSON model config (aggregator, hidden, unknown_label_weight, train); replaces the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Aggregator::Mean)]
    aggregator: Aggregator,
    /// Hidden layer widths; one per hop.
    #[arg(long, value_delimiter = ',', default_value = "32,32")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    weight_decay: f64,
    /// Neighbours sampled per hop, nearest hop first.
    #[arg(long, value_delimiter = ',', default_value = "10,25")]
    fanout: Vec<usize>,
    /// Reverse the fanout list so it is read farthest hop first.
    #[arg(long)]
    fanout_outer_first: bool,
    /// Weight of neighbours whose label is hidden or missing.
    #[arg(long, default_value_t = 0.5)]
    unknown_weight: f64,
}

impl TrainArgs {
    fn entry(&self, seed: u64) -> Result<GridEntry> {
        let mut e = match &self.config {
            Some(p) => input::read_json::<GridEntry>(p)?,
            None => {
                let mut fanout = SampleFanout::new(self.fanout.clone())?;
                if self.fanout_outer_first {
                    fanout = fanout.reversed();
                }
                let train = TrainConfig {
                    epochs: self.epochs,
                    batch_size: self.batch_size,
                    lr: self.lr,
                    weight_decay: self.weight_decay,
                    fanout,
                    ..TrainConfig::default()
                };
                GridEntry {
                    unknown_label_weight: self.unknown_weight,
                    ..GridEntry::new(self.aggregator.into(), self.hidden.clone(), train)
                }
            }
        };
        e.train.seed = seed;
        e.train.validate()?;
        Ok(e)
    }
}

pub fn train(ctx: &Ctx, a: &TrainArgs) -> Result<Artifacts> {
    let entry = a.entry(ctx.seed)?;
    let l = a.exp.load()?;
    let spec = entry.model_spec(l.features.ncols(), l.classes.len());
    spec.validate()?;
    let mut model = SageModel::new(spec, ctx.seed)?;
    let report = fit(&mut model, &l.data(Role::Train), &l.split.nodes(Role::Train), &entry.train)?;
    let val = evaluate(&model, &l.data(Role::Val), &l.split.nodes(Role::Val), &entry.train.fanout, ctx.seed)?;
    let mut art = Artifacts::new(json!({ "inputs": a.exp.describe(), "model": entry }))?;
    art.with("checkpoint.json", |w| save_checkpoint(&model, &entry.train.fanout, w))?;
    let history = json!({ "loss_history": report.loss_history, "batch_loss": report.batch_loss, "val_micro_f1": val.micro_f1 });
    table(&mut art, ctx.format, "history", &history, |w| {
        writeln!(w, "epoch\tloss")?;
        for (i, x) in report.loss_history.iter().enumerate() {
            writeln!(w, "{i}\t{}", format_g(*x, 10))?;
        }
        Ok(())
    })?;
    art.say(format!(
        "{}: final loss {}, validation micro-F1 {:.4}",
        entry.label(),
        report.loss_history.last().map_or("n/a".into(), |x| format!("{x:.4}")),
        val.micro_f1
    ));
    Ok(art)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalRole {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Checkpoint written by `train`.
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalRole::Test)]
    role: EvalRole,
}

pub fn eval(ctx: &Ctx, a: &EvalArgs) -> Result<Artifacts> {
    let (model, fanout) =
        load_checkpoint(input::open(&a.checkpoint)?).with_context(|| format!("reading {}", a.checkpoint.display()))?;
    let l = a.exp.load()?;
    if model.spec.input_dim != l.features.ncols() {
        bail!("checkpoint expects {} input columns, features have {}", model.spec.input_dim, l.features.ncols());
    }
    if model.spec.classes != l.classes.len() {
        bail!("checkpoint predicts {} classes, hierarchy has {} leaves", model.spec.classes, l.classes.len());
    }
    let role = match a.role {
        EvalRole::Train => Role::Train,
        EvalRole::Val => Role::Val,
        EvalRole::Test => Role::Test,
    };
    let nodes = l.split.nodes(role);
    let data = l.data(role);
    let metrics = evaluate(&model, &data, &nodes, &fanout, ctx.seed)?;
    let predicted = predict(&model, &data, &nodes, &fanout, ctx.seed)?;
    let h = &l.d.hierarchy;
    let rows: Vec<_> = nodes
        .iter()
        .zip(&predicted)
        .map(|(&u, &p)| {
            json!({
                "node": l.d.nodes.name(u),
                "label": l.d.nodes.label(u),
                "predicted": h.name(l.classes.leaves[p]),
            })
        })
        .collect();
    let mut art = Artifacts::new(json!({ "inputs": a.exp.describe(), "checkpoint": a.checkpoint, "role": a.role }))?;
    art.json("metrics.json", &metrics)?;
    table(&mut art, ctx.format, "predictions", &rows, |w| {
        writeln!(w, "node\tlabel\tpredicted")?;
        for (&u, &p) in nodes.iter().zip(&predicted) {
            writeln!(w, "{}\t{}\t{}", l.d.nodes.name(u), l.d.nodes.label(u).unwrap_or(""), h.name(l.classes.leaves[p]))?;
        }
        Ok(())
    })?;
    art.say(format!("{} micro-F1 {:.4} on {} nodes", role.as_str(), metrics.micro_f1, nodes.len()));
    Ok(art)
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// JSON array of grid points; each training seed is replaced by --seed.
    #[arg(long)]
    grid: PathBuf,
}

pub fn search(ctx: &Ctx, a: &SearchArgs) -> Result<Artifacts> {
    let mut grid: Vec<GridEntry> = input::read_json(&a.grid)?;
    if grid.is_empty() {
        bail!("{} holds no grid points", a.grid.display());
    }
    for (i, e) in grid.iter_mut().enumerate() {
        e.train.seed = ctx.seed;
        e.train.validate().with_context(|| format!("grid point {i}"))?;
        e.model_spec(1, 1).validate().with_context(|| format!("grid point {i}"))?;
    }
    let l = a.exp.load()?;
    let result = grid_search(&l.experiment(), &grid)?;
    let mut art = Artifacts::new(json!({ "inputs": a.exp.describe(), "grid": grid }))?;
    table(&mut art, ctx.format, "leaderboard", &result.leaderboard, |w| {
        writeln!(w, "rank\tindex\tlabel\tparameters\tval_micro_f1\ttest_micro_f1\tfinal_loss")?;
        for (rank, r) in result.leaderboard.iter().enumerate() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                rank + 1,
                r.index,
                r.label,
                r.parameters,
                format_g(r.val_micro_f1, 6),
                format_g(r.test_micro_f1, 6),
                r.final_loss.map_or(String::new(), |x| format_g(x, 6))
            )?;
        }
        Ok(())
    })?;
    art.json("best.json", &result.best)?;
    let top = &result.leaderboard[0];
    art.say(format!("best: {} (grid point {}), validation micro-F1 {:.4}", top.label, top.index, top.val_micro_f1));
    Ok(art)
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON bench config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds to average over [default: --seed].
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

pub fn bench(ctx: &Ctx, a: &BenchArgs) -> Result<Artifacts> {
    let mut cfg: BenchConfig = match &a.config {
        Some(p) => input::read_json(p)?,
        None => BenchConfig::default(),
    };
    cfg.seeds = a.seeds.clone().unwrap_or_else(|| vec![ctx.seed]);
    if let Some(n) = a.nodes {
        cfg.synth.nodes = n;
    }
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    cfg.synth.validate()?;
    cfg.split.fractions.validate()?;
    cfg.train.validate()?;
    let report = run_bench(&cfg)?;
    let mut art = Artifacts::new(&cfg)?;
    table(&mut art, ctx.format, "bench", &report.rows, |w| report.write_tsv(w))?;
    art.json("bench_report.json", &report)?;
    for r in &report.rows {
        art.say(format!("{:8} val {:.4}  test {:.4}", r.aggregator, r.val_micro_f1, r.test_micro_f1));
    }
    Ok(art)
}
