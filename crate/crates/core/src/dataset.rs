//! A labelled graph on disk: `edges.tsv`, `nodes.tsv` and `hierarchy.tsv`
//! in one directory.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::graph::{load_edge_list, write_edge_list, Graph, IdMap, NodeTable};
use crate::hierarchy::{ClassId, LabelHierarchy};
use crate::synth::SynthGraph;

pub const EDGES_FILE: &str = "edges.tsv";
pub const NODES_FILE: &str = "nodes.tsv";
pub const HIERARCHY_FILE: &str = "hierarchy.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub nodes: NodeTable,
    pub hierarchy: LabelHierarchy,
    pub labels: Vec<Option<ClassId>>,
}

impl Dataset {
    pub fn new(graph: Graph, nodes: NodeTable, hierarchy: LabelHierarchy) -> Result<Self> {
        let labels = nodes.resolve_labels(&hierarchy)?;
        Ok(Dataset {
            graph,
            nodes,
            hierarchy,
            labels,
        })
    }

    /// Names nodes `v0 .. v{n-1}`.
    pub fn from_synth(s: SynthGraph) -> Result<Self> {
        let mut nodes = NodeTable::new();
        for (u, label) in s.labels.iter().enumerate() {
            nodes.push(format!("v{u}"), label.map(|c| s.hierarchy.name(c).to_owned()))?;
        }
        Ok(Dataset {
            graph: s.graph,
            nodes,
            hierarchy: s.hierarchy,
            labels: s.labels,
        })
    }

    /// Restriction to the largest connected component, with the id mapping.
    pub fn largest_component(&self) -> Result<(Dataset, IdMap)> {
        let (graph, map) = self.graph.largest_connected_component();
        let mut nodes = NodeTable::new();
        for &old in &map.new_to_old {
            nodes.push(self.nodes.name(old), self.nodes.label(old).map(str::to_owned))?;
        }
        let labels = map.new_to_old.iter().map(|&old| self.labels[old]).collect();
        Ok((
            Dataset {
                graph,
                nodes,
                hierarchy: self.hierarchy.clone(),
                labels,
            },
            map,
        ))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let hierarchy = LabelHierarchy::read(BufReader::new(File::open(dir.join(HIERARCHY_FILE))?))?;
        let table = NodeTable::read(BufReader::new(File::open(dir.join(NODES_FILE))?))?;
        let (graph, nodes) = load_edge_list(BufReader::new(File::open(dir.join(EDGES_FILE))?), Some(&table))?;
        Self::new(graph, nodes, hierarchy)
    }

    /// Writes the three files and returns their paths.
    pub fn save(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let paths: Vec<_> = [EDGES_FILE, NODES_FILE, HIERARCHY_FILE].iter().map(|f| dir.join(f)).collect();
        let mut w = BufWriter::new(File::create(&paths[0])?);
        write_edge_list(&self.graph, &self.nodes, &mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(&paths[1])?);
        self.nodes.write(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(&paths[2])?);
        self.hierarchy.write(&mut w)?;
        w.flush()?;
        Ok(paths)
    }
}
