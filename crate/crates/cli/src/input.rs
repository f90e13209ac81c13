use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hiersage::dataset::Dataset;
use hiersage::features::FeatureMatrix;
use hiersage::graph::{load_edge_list, NodeTable};
use hiersage::split::{build_split_graphs, SplitAssignment};
use hiersage::Graph;
use serde::de::DeserializeOwned;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// A graph given either as a dataset directory or as a bare edge list.
#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Dataset directory holding edges.tsv, nodes.tsv and hierarchy.tsv.
    #[arg(long, conflicts_with_all = ["edges", "nodes"])]
    pub data: Option<PathBuf>,
    /// Tab-separated edge list.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Node table for --edges; fixes node order and covers isolated nodes.
    #[arg(long, requires = "edges")]
    pub nodes: Option<PathBuf>,
}

impl GraphArgs {
    pub fn load(&self) -> Result<(Graph, NodeTable)> {
        match (&self.data, &self.edges) {
            (Some(dir), _) => {
                let d = load_dataset(dir)?;
                Ok((d.graph, d.nodes))
            }
            (None, Some(edges)) => {
                let table = match &self.nodes {
                    Some(p) => Some(NodeTable::read(open(p)?).with_context(|| format!("reading {}", p.display()))?),
                    None => None,
                };
                load_edge_list(open(edges)?, table.as_ref()).with_context(|| format!("reading {}", edges.display()))
            }
            (None, None) => bail!("one of --data or --edges is required"),
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "data": self.data, "edges": self.edges, "nodes": self.nodes })
    }
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    Dataset::load(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

pub fn load_split(path: &Path, n: usize) -> Result<SplitAssignment> {
    let s = SplitAssignment::read(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if s.roles.len() != n {
        bail!("split {} covers {} nodes but the graph has {n}", path.display(), s.roles.len());
    }
    Ok(s)
}

pub fn load_features(path: &Path, n: usize) -> Result<FeatureMatrix> {
    let f = FeatureMatrix::read_tsv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if f.rows() != n {
        bail!("features {} have {} rows but the graph has {n} nodes", path.display(), f.rows());
    }
    if f.values().iter().any(|x| !x.is_finite()) {
        bail!("features {} contain non-finite values", path.display());
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphChoice {
    Full,
    Train,
    Val,
    Test,
}

/// Graph to compute structure on, with an optional split restricting it.
#[derive(Debug, Clone, Args)]
pub struct ViewArgs {
    /// Split file (`id<TAB>role`); enables --on.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Which graph of the split to use [default: train with --split, full otherwise].
    #[arg(long, value_enum)]
    pub on: Option<GraphChoice>,
}

impl ViewArgs {
    pub fn resolve(&self) -> Result<GraphChoice> {
        match (self.on, &self.split) {
            (Some(c), Some(_)) => Ok(c),
            (Some(GraphChoice::Full), None) | (None, None) => Ok(GraphChoice::Full),
            (Some(c), None) => bail!("--on {c:?} needs --split"),
            (None, Some(_)) => Ok(GraphChoice::Train),
        }
    }

    /// The selected graph over the original node ids. Nodes outside the
    /// chosen split graph stay as isolated rows.
    pub fn select(&self, g: Graph) -> Result<Graph> {
        let choice = self.resolve()?;
        let Some(path) = &self.split else { return Ok(g) };
        let split = load_split(path, g.node_count())?;
        let mut graphs = build_split_graphs(&g, &split)?;
        Ok(match choice {
            GraphChoice::Full => g,
            GraphChoice::Train => std::mem::replace(&mut graphs.train.graph, Graph::empty(0)),
            GraphChoice::Val => std::mem::replace(&mut graphs.val.graph, Graph::empty(0)),
            GraphChoice::Test => std::mem::replace(&mut graphs.test.graph, Graph::empty(0)),
        })
    }
}
