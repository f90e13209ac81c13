//! Immutable undirected simple graph with dense node ids, plus the node table
//! mapping ids to external names and optional labels.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::hierarchy::{ClassId, LabelHierarchy};

pub type NodeId = usize;

/// Undirected simple graph stored as compressed sorted adjacency.
///
/// Construction drops self-loops and merges duplicate or reversed edges, so
/// the adjacency of every node is sorted, duplicate-free and symmetric.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

/// Relabeling produced by subgraph extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMap {
    pub old_to_new: Vec<Option<NodeId>>,
    pub new_to_old: Vec<NodeId>,
}

impl IdMap {
    pub fn identity(n: usize) -> Self {
        IdMap {
            old_to_new: (0..n).map(Some).collect(),
            new_to_old: (0..n).collect(),
        }
    }
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    /// Builds a graph on nodes `0..n` from an arbitrary edge stream.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { node: x, n });
                }
            }
            if u == v {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self::from_adjacency(adjacency))
    }

    fn from_adjacency(mut adjacency: Vec<Vec<NodeId>>) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Graph { offsets, targets }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    /// Number of unordered edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    /// Sorted neighbours of `u`. Panics if `u` is out of range.
    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: NodeId) -> Result<usize> {
        if u >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                node: u,
                n: self.node_count(),
            });
        }
        Ok(self.neighbors(u).len())
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Keeps the node set and the edges accepted by `keep`.
    pub fn filter_edges<F>(&self, mut keep: F) -> Graph
    where
        F: FnMut(NodeId, NodeId) -> bool,
    {
        let adjacency = (0..self.node_count())
            .map(|u| {
                self.neighbors(u)
                    .iter()
                    .copied()
                    .filter(|&v| keep(u, v))
                    .collect()
            })
            .collect();
        Graph::from_adjacency(adjacency)
    }

    /// Component id per node (ids ordered by smallest member) and component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    /// True when the graph has exactly one component. The empty graph is not connected.
    pub fn is_connected(&self) -> bool {
        self.components().1 == 1
    }

    /// Largest component; ties go to the component holding the smallest id.
    pub fn largest_connected_component(&self) -> (Graph, IdMap) {
        let (comp, count) = self.components();
        if count == 0 {
            return (Graph::empty(0), IdMap::identity(0));
        }
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        // Component ids follow the smallest member, so the first maximum wins the tie.
        let best = (0..count).fold(0, |b, c| if sizes[c] > sizes[b] { c } else { b });
        let keep: Vec<NodeId> = (0..self.node_count()).filter(|&u| comp[u] == best).collect();
        self.induced_subgraph(&keep)
    }

    /// Subgraph induced by `keep`, relabeled to `0..keep.len()` in increasing old-id order.
    pub fn induced_subgraph(&self, keep: &[NodeId]) -> (Graph, IdMap) {
        let n = self.node_count();
        let mut old_to_new = vec![None; n];
        let mut new_to_old: Vec<NodeId> = keep.iter().copied().filter(|&u| u < n).collect();
        new_to_old.sort_unstable();
        new_to_old.dedup();
        for (new, &old) in new_to_old.iter().enumerate() {
            old_to_new[old] = Some(new);
        }
        let adjacency = new_to_old
            .iter()
            .map(|&old| {
                self.neighbors(old)
                    .iter()
                    .filter_map(|&v| old_to_new[v])
                    .collect()
            })
            .collect();
        (
            Graph::from_adjacency(adjacency),
            IdMap {
                old_to_new,
                new_to_old,
            },
        )
    }

    /// Full scan of the structural invariants.
    pub fn check_invariants(&self) -> bool {
        let n = self.node_count();
        let mut total = 0;
        for u in 0..n {
            let nb = self.neighbors(u);
            total += nb.len();
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &v in nb {
                if v >= n || v == u || !self.has_edge(v, u) {
                    return false;
                }
            }
        }
        total % 2 == 0 && total / 2 == self.edge_count()
    }
}

/// External names and optional leaf-class labels of the nodes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeTable {
    names: Vec<String>,
    labels: Vec<Option<String>>,
    index: HashMap<String, NodeId>,
}

impl NodeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a node; fails on a duplicate name.
    pub fn push(&mut self, name: impl Into<String>, label: Option<String>) -> Result<NodeId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate node name `{name}`")));
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.labels.push(label);
        Ok(id)
    }

    fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.index.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        self.labels.push(None);
        id
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    pub fn label(&self, id: NodeId) -> Option<&str> {
        self.labels[id].as_deref()
    }

    pub fn set_label(&mut self, id: NodeId, label: Option<String>) {
        self.labels[id] = label;
    }

    /// Resolves label names to leaf classes of `h`.
    pub fn resolve_labels(&self, h: &LabelHierarchy) -> Result<Vec<Option<ClassId>>> {
        self.labels
            .iter()
            .map(|label| match label {
                None => Ok(None),
                Some(name) => {
                    let class = h
                        .class_id(name)
                        .ok_or_else(|| Error::UnknownClass(name.clone()))?;
                    if !h.is_leaf(class) {
                        return Err(Error::NotLeaf(name.clone()));
                    }
                    Ok(Some(class))
                }
            })
            .collect()
    }

    /// Reads `id<TAB>name<TAB>label-or-"-"` lines; ids must be a permutation of `0..n`.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<(usize, String, Option<String>, usize)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(lineno, "expected `id<TAB>name<TAB>label`"));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad node id `{}`", fields[0])))?;
            let label = match fields[2] {
                "-" | "" => None,
                l => Some(l.to_owned()),
            };
            rows.push((id, fields[1].to_owned(), label, lineno));
        }
        rows.sort_by_key(|r| r.0);
        let mut table = NodeTable::new();
        for (expected, (id, name, label, lineno)) in rows.into_iter().enumerate() {
            if id != expected {
                return Err(Error::parse(lineno, format!("node ids must be dense, missing {expected}")));
            }
            table
                .push(name, label)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (id, name) in self.names.iter().enumerate() {
            writeln!(w, "{id}\t{name}\t{}", self.labels[id].as_deref().unwrap_or("-"))?;
        }
        Ok(())
    }
}

/// Parses a `u<TAB>v` edge list.
///
/// Without a node table, ids are assigned in first-appearance order and a
/// label-free table is returned. With a table, every name must be known and
/// the graph covers all table entries, including those without edges.
pub fn load_edge_list<R: BufRead>(reader: R, nodes: Option<&NodeTable>) -> Result<(Graph, NodeTable)> {
    let mut table = nodes.cloned().unwrap_or_default();
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(lineno, "expected `u<TAB>v`"));
        };
        if a.is_empty() || b.is_empty() {
            return Err(Error::parse(lineno, "empty node identifier"));
        }
        let (u, v) = if nodes.is_some() {
            let lookup = |s: &str| table.id(s).ok_or_else(|| Error::UnknownNode(s.to_owned()));
            (lookup(a)?, lookup(b)?)
        } else {
            (table.intern(a), table.intern(b))
        };
        edges.push((u, v));
    }
    let graph = Graph::from_edges(table.len(), edges)?;
    Ok((graph, table))
}

/// Writes edges with `u < v` in sorted id order, using the table's names.
pub fn write_edge_list<W: Write>(g: &Graph, nodes: &NodeTable, mut w: W) -> Result<()> {
    for (u, v) in g.edges() {
        writeln!(w, "{}\t{}", nodes.name(u), nodes.name(v))?;
    }
    Ok(())
}
