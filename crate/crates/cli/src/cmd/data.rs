use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hiersage::analysis::{distinct_labels_per_node, label_distribution, neighbourhood_label_matrix};
use hiersage::dataset::{Dataset, EDGES_FILE, HIERARCHY_FILE, NODES_FILE};
use hiersage::embed::{embed_graph, SkipGramConfig, WalkConfig};
use hiersage::features::{assemble_features, ColumnKind, FeatureMatrix};
use hiersage::graph::write_edge_list;
use hiersage::netfeat::{self, BetweennessConfig};
use hiersage::split::{build_split_graphs, make_split, Connectivity, ConnectivityReport, Fractions, Role, SplitConfig};
use hiersage::synth::{empirical_homophily, generate, group_attributes, ClassSizes, SynthConfig};
use hiersage::LabelHierarchy;
use serde::Serialize;
use serde_json::json;

use super::table;
use crate::input::{self, GraphArgs, ViewArgs};
use crate::output::Artifacts;
use crate::{Ctx, Format};

pub fn feature_json(f: &FeatureMatrix) -> serde_json::Value {
    let kinds: Vec<&str> = f
        .kinds()
        .iter()
        .map(|k| match k {
            ColumnKind::Continuous => "continuous",
            ColumnKind::OneHot => "one_hot",
        })
        .collect();
    let rows: Vec<Vec<f64>> = f.values().rows().into_iter().map(|r| r.to_vec()).collect();
    json!({ "columns": f.names(), "kinds": kinds, "rows": rows })
}

fn feature_output(art: &mut Artifacts, format: Format, stem: &str, f: &FeatureMatrix) -> Result<()> {
    table(art, format, stem, &feature_json(f), |w| f.write_tsv(w))
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON generator config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    leaves_per_group: Option<usize>,
    /// Geometric class-size ratio.
    #[arg(long, conflicts_with = "uniform")]
    ratio: Option<f64>,
    /// Equal class sizes.
    #[arg(long)]
    uniform: bool,
    #[arg(long)]
    p_same: Option<f64>,
    #[arg(long)]
    p_sibling: Option<f64>,
    #[arg(long)]
    p_far: Option<f64>,
    #[arg(long)]
    star_classes: Option<usize>,
    #[arg(long)]
    p_star: Option<f64>,
    /// Reject configs where a class expects under one neighbour.
    #[arg(long)]
    strict: bool,
    /// Keep only the largest connected component.
    #[arg(long)]
    largest_component: bool,
    /// Accuracy of the noisy group attribute column block.
    #[arg(long, default_value_t = 0.8)]
    attribute_accuracy: f64,
    /// Skip attributes.tsv.
    #[arg(long)]
    no_attributes: bool,
}

impl SynthArgs {
    fn resolve(&self, seed: u64) -> Result<SynthConfig> {
        let mut c: SynthConfig = match &self.config {
            Some(p) => input::read_json(p)?,
            None => SynthConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(nodes, groups, leaves_per_group, p_same, p_sibling, p_far, star_classes, p_star);
        if let Some(r) = self.ratio {
            c.sizes = ClassSizes::Geometric { ratio: r };
        }
        if self.uniform {
            c.sizes = ClassSizes::Uniform;
        }
        c.strict |= self.strict;
        c.seed = seed;
        c.validate()?;
        Ok(c)
    }
}

pub fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<Artifacts> {
    let cfg = a.resolve(ctx.seed)?;
    if !a.no_attributes && !(0.0..=1.0).contains(&a.attribute_accuracy) {
        bail!("--attribute-accuracy must lie in [0, 1]");
    }
    let mut d = Dataset::from_synth(generate(&cfg)?)?;
    if a.largest_component {
        d = d.largest_component()?.0;
    }
    let mut art = Artifacts::new(json!({
        "synth": cfg,
        "largest_component": a.largest_component,
        "attribute_accuracy": (!a.no_attributes).then_some(a.attribute_accuracy),
    }))?;
    art.with(EDGES_FILE, |w| write_edge_list(&d.graph, &d.nodes, w))?;
    art.with(NODES_FILE, |w| d.nodes.write(w))?;
    art.with(HIERARCHY_FILE, |w| d.hierarchy.write(w))?;
    if !a.no_attributes {
        let attrs = group_attributes(&d.labels, &d.hierarchy, a.attribute_accuracy, ctx.seed)?;
        art.with("attributes.tsv", |w| attrs.write_tsv(w))?;
    }
    let (leaf, group) = empirical_homophily(&d.graph, &d.labels, &d.hierarchy);
    let report = json!({
        "nodes": d.graph.node_count(),
        "edges": d.graph.edge_count(),
        "components": d.graph.components().1,
        "class_sizes": label_distribution(&d.labels, &d.hierarchy),
        "leaf_homophily": leaf,
        "group_homophily": group,
    });
    art.json("synth_report.json", &report)?;
    art.say(format!(
        "{} nodes, {} edges, leaf homophily {leaf:.3}, group homophily {group:.3}",
        d.graph.node_count(),
        d.graph.edge_count()
    ));
    Ok(art)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Degree,
    Assortativity,
    Louvain,
    Betweenness,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    view: ViewArgs,
    /// Feature blocks to compute, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "degree,assortativity,louvain,betweenness")]
    only: Vec<Feature>,
    /// Column budget of the community one-hot block.
    #[arg(long, default_value_t = 16)]
    max_communities: usize,
    /// Divide betweenness by the number of pairs excluding the node.
    #[arg(long)]
    normalized: bool,
    /// Sampled sources for approximate betweenness [default: exact up to 50000 nodes].
    #[arg(long)]
    pivots: Option<usize>,
    /// Standardize continuous columns using the training rows of --split.
    #[arg(long, requires = "split")]
    standardize: bool,
}

pub fn features(ctx: &Ctx, a: &FeaturesArgs) -> Result<Artifacts> {
    if a.only.is_empty() {
        bail!("--only needs at least one feature");
    }
    let (g, _) = a.graph.load()?;
    let on = a.view.resolve()?;
    let g = a.view.select(g)?;
    let mut bc = BetweennessConfig::for_graph(&g, ctx.seed);
    bc.normalized = a.normalized;
    if let Some(p) = a.pivots {
        if p == 0 {
            bail!("--pivots must be positive");
        }
        bc.pivots = Some(p);
    }
    let mut parts = Vec::new();
    let mut communities = None;
    for f in &a.only {
        parts.push(match f {
            Feature::Degree => netfeat::degree_column(&g)?,
            Feature::Assortativity => netfeat::assortativity_column(&g)?,
            Feature::Betweenness => netfeat::betweenness_column(&g, &bc)?,
            Feature::Louvain => {
                let p = netfeat::louvain(&g, ctx.seed);
                let q = if g.edge_count() > 0 { Some(netfeat::modularity(&g, &p)?) } else { None };
                communities = Some(json!({ "count": p.count(), "modularity": q }));
                netfeat::one_hot_communities(&p, a.max_communities)?
            }
        });
    }
    let train_rows = match (&a.view.split, a.standardize) {
        (Some(p), true) => Some(input::load_split(p, g.node_count())?.nodes(Role::Train)),
        _ => None,
    };
    let m = assemble_features(&parts, train_rows.as_deref())?;
    let mut art = Artifacts::new(json!({
        "graph": a.graph.describe(),
        "split": a.view.split,
        "on": on,
        "only": a.only,
        "max_communities": a.max_communities,
        "betweenness": { "normalized": bc.normalized, "pivots": bc.pivots },
        "standardize": a.standardize,
        "seed": ctx.seed,
    }))?;
    feature_output(&mut art, ctx.format, "features", &m)?;
    if let Some(c) = communities {
        art.json("communities.json", &c)?;
    }
    art.say(format!("{} rows × {} columns", m.rows(), m.cols()));
    Ok(art)
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    view: ViewArgs,
    #[arg(long, default_value_t = 128)]
    dim: usize,
    #[arg(long, default_value_t = 40)]
    walk_length: usize,
    #[arg(long, default_value_t = 10)]
    walks_per_node: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f64,
}

pub fn embed(ctx: &Ctx, a: &EmbedArgs) -> Result<Artifacts> {
    let (g, _) = a.graph.load()?;
    let on = a.view.resolve()?;
    let g = a.view.select(g)?;
    let walks = WalkConfig {
        length: a.walk_length,
        walks_per_node: a.walks_per_node,
    };
    let sg = SkipGramConfig {
        dim: a.dim,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        lr: a.lr,
        seed: ctx.seed,
    };
    let out = embed_graph(&g, &walks, &sg)?;
    let mut art = Artifacts::new(json!({
        "graph": a.graph.describe(),
        "split": a.view.split,
        "on": on,
        "walks": walks,
        "skipgram": sg,
    }))?;
    feature_output(&mut art, ctx.format, "embeddings", &out.table.to_features()?)?;
    art.json("embed_report.json", &json!({ "epoch_loss": out.epoch_loss }))?;
    art.say(format!("{} vectors of dimension {}", g.node_count(), a.dim));
    Ok(art)
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.2,0.1")]
    frac: Vec<f64>,
    /// Require all three split graphs to be connected.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 1000)]
    max_retries: usize,
}

pub fn split(ctx: &Ctx, a: &SplitArgs) -> Result<Artifacts> {
    let &[train, val, test] = a.frac.as_slice() else {
        bail!("--frac needs exactly three values, got {}", a.frac.len());
    };
    let cfg = SplitConfig {
        fractions: Fractions { train, val, test },
        seed: ctx.seed,
        max_retries: a.max_retries,
        connectivity: if a.strict { Connectivity::Strict } else { Connectivity::Relaxed },
    };
    cfg.fractions.validate()?;
    let (g, _) = a.graph.load()?;
    let s = make_split(&g, &cfg)?;
    let report = ConnectivityReport::of(&build_split_graphs(&g, &s)?, &s);
    let mut art = Artifacts::new(json!({ "graph": a.graph.describe(), "split": cfg }))?;
    art.with("split.tsv", |w| s.write(w))?;
    let counts = [Role::Train, Role::Val, Role::Test].map(|r| s.count(r));
    art.json(
        "split_report.json",
        &json!({
            "attempt": s.attempt,
            "train": counts[0],
            "val": counts[1],
            "test": counts[2],
            "connectivity": report,
        }),
    )?;
    art.say(format!(
        "train {} / val {} / test {} after {} attempt(s)",
        counts[0],
        counts[1],
        counts[2],
        s.attempt + 1
    ));
    Ok(art)
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
}

pub fn analyze(ctx: &Ctx, a: &AnalyzeArgs) -> Result<Artifacts> {
    let d = input::load_dataset(&a.data)?;
    let m = neighbourhood_label_matrix(&d.graph, &d.labels, &d.hierarchy);
    let mut art = Artifacts::new(json!({ "data": a.data }))?;
    let matrix = json!({ "classes": m.names, "support": m.support, "rows": m.values.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>() });
    table(&mut art, ctx.format, "label_matrix", &matrix, |w| m.write_tsv(w))?;
    let unlabelled = d.labels.iter().filter(|l| l.is_none()).count();
    art.json(
        "histograms.json",
        &json!({
            "label_distribution": label_distribution(&d.labels, &d.hierarchy),
            "distinct_neighbour_labels": distinct_labels_per_node(&d.graph, &d.labels),
            "classes_per_depth": d.hierarchy.depth_histogram(),
            "unlabelled_nodes": unlabelled,
        }),
    )?;
    let off = (0..m.names.len()).filter(|&i| m.support[i] > 0 && !m.diagonal_is_max(i)).count();
    art.say(format!("{} leaf classes, {off} with an off-diagonal row maximum", m.names.len()));
    Ok(art)
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    /// Hierarchy file (`class<TAB>parent`, `-` as the root's parent).
    file: PathBuf,
}

pub fn hierarchy(_ctx: &Ctx, a: &HierarchyArgs) -> Result<Artifacts> {
    let h = LabelHierarchy::read(input::open(&a.file)?).with_context(|| format!("validating {}", a.file.display()))?;
    let leaves = h.leaves();
    let mut art = Artifacts::new(json!({ "file": a.file }))?;
    art.json(
        "hierarchy_summary.json",
        &json!({
            "root": h.name(h.root()),
            "classes": h.len(),
            "leaves": leaves.iter().map(|&c| h.name(c)).collect::<Vec<_>>(),
            "classes_per_depth": h.depth_histogram(),
        }),
    )?;
    art.say(format!(
        "valid hierarchy: root `{}`, {} classes, {} leaves, depth {}",
        h.name(h.root()),
        h.len(),
        leaves.len(),
        h.depth_histogram().len() - 1
    ));
    Ok(art)
}
