//! Label taxonomy and the label-similarity weights of the weighted-mean
//! aggregators.
//!
//! The hierarchy is a rooted tree of classes. Only leaves are assignable to
//! nodes. Two weightings are provided: a three-level table (same class,
//! sibling class, anything else) and a continuous weight decaying with the
//! distance to the lowest common ancestor.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ClassId = usize;

/// Weight of a neighbour sharing the center's class.
pub const SAME_CLASS_WEIGHT: f64 = 1.0;
/// Weight of a neighbour whose class has the same parent group.
pub const SIBLING_CLASS_WEIGHT: f64 = 0.75;
/// Weight of any other neighbour.
pub const DISTANT_CLASS_WEIGHT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelHierarchy {
    names: Vec<String>,
    parent: Vec<Option<ClassId>>,
    children: Vec<Vec<ClassId>>,
    depth: Vec<usize>,
    root: ClassId,
    preorder: Vec<ClassId>,
    index: HashMap<String, ClassId>,
}

impl LabelHierarchy {
    /// Builds a tree from `(name, parent name)` pairs; `None` marks the root.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, Option<S>)]) -> Result<Self> {
        let mut index: HashMap<String, ClassId> = HashMap::new();
        let mut names = Vec::with_capacity(pairs.len());
        for (name, _) in pairs {
            let name = name.as_ref();
            if index.insert(name.to_owned(), names.len()).is_some() {
                return Err(Error::Hierarchy(format!("class `{name}` declared twice")));
            }
            names.push(name.to_owned());
        }
        let mut parent = Vec::with_capacity(pairs.len());
        let mut roots = Vec::new();
        for (id, (name, p)) in pairs.iter().enumerate() {
            match p {
                None => {
                    roots.push(id);
                    parent.push(None);
                }
                Some(p) => {
                    let p = p.as_ref();
                    let pid = *index.get(p).ok_or_else(|| {
                        Error::Hierarchy(format!("class `{}` has undeclared parent `{p}`", name.as_ref()))
                    })?;
                    parent.push(Some(pid));
                }
            }
        }
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::Hierarchy("no root declared".into())),
            _ => {
                let names: Vec<&str> = roots.iter().map(|&r| names[r].as_str()).collect();
                return Err(Error::Hierarchy(format!("multiple roots: {}", names.join(", "))));
            }
        };
        let mut children = vec![Vec::new(); names.len()];
        for (id, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(id);
            }
        }
        let mut depth = vec![usize::MAX; names.len()];
        let mut preorder = Vec::with_capacity(names.len());
        let mut stack = vec![(root, 0usize)];
        while let Some((c, d)) = stack.pop() {
            depth[c] = d;
            preorder.push(c);
            stack.extend(children[c].iter().rev().map(|&k| (k, d + 1)));
        }
        if preorder.len() != names.len() {
            // Whatever the root cannot reach sits on a parent cycle.
            let stuck = (0..names.len()).find(|&c| depth[c] == usize::MAX).unwrap();
            return Err(Error::Hierarchy(format!(
                "class `{}` is on a cycle and not reachable from the root",
                names[stuck]
            )));
        }
        // Renumber so that ids follow pre-order; equal trees then compare equal
        // regardless of declaration order.
        let mut new_id = vec![0; names.len()];
        for (i, &c) in preorder.iter().enumerate() {
            new_id[c] = i;
        }
        let names: Vec<String> = preorder.iter().map(|&c| names[c].clone()).collect();
        Ok(LabelHierarchy {
            parent: preorder.iter().map(|&c| parent[c].map(|p| new_id[p])).collect(),
            children: preorder.iter().map(|&c| children[c].iter().map(|&k| new_id[k]).collect()).collect(),
            depth: preorder.iter().map(|&c| depth[c]).collect(),
            root: 0,
            index: names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect(),
            preorder: (0..names.len()).collect(),
            names,
        })
    }

    /// Reads `child<TAB>parent` lines, with `-` as the root's parent.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs: Vec<(String, Option<String>)> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 || fields[0].is_empty() || fields[1].is_empty() {
                return Err(Error::parse(lineno, "expected `child<TAB>parent`"));
            }
            if let Some(prev) = seen.insert(fields[0].to_owned(), lineno) {
                return Err(Error::parse(
                    lineno,
                    format!("class `{}` already declared on line {prev}", fields[0]),
                ));
            }
            let parent = (fields[1] != "-").then(|| fields[1].to_owned());
            pairs.push((fields[0].to_owned(), parent));
        }
        Self::from_pairs(&pairs)
    }

    /// Writes the tree in pre-order, one `child<TAB>parent` line per class.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for &c in &self.preorder {
            let parent = self.parent[c].map_or("-", |p| self.names[p].as_str());
            writeln!(w, "{}\t{parent}", self.names[c])?;
        }
        Ok(())
    }

    /// Root with `groups` children, each holding `leaves_per_group` leaves.
    pub fn grouped(groups: usize, leaves_per_group: usize) -> Self {
        let mut pairs = vec![("root".to_owned(), None)];
        for g in 0..groups {
            let group = format!("G{g}");
            for l in 0..leaves_per_group {
                pairs.push((format!("G{g}.L{l}"), Some(group.clone())));
            }
            pairs.push((group, Some("root".to_owned())));
        }
        Self::from_pairs(&pairs).expect("generated hierarchy is valid")
    }

    /// Complete tree with the given branching factor and leaf depth.
    pub fn balanced(branching: usize, depth: usize) -> Self {
        let mut pairs: Vec<(String, Option<String>)> = vec![("root".into(), None)];
        let mut frontier = vec!["root".to_owned()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for p in &frontier {
                for b in 0..branching {
                    let name = if p == "root" { format!("C{b}") } else { format!("{p}.{b}") };
                    pairs.push((name.clone(), Some(p.clone())));
                    next.push(name);
                }
            }
            frontier = next;
        }
        Self::from_pairs(&pairs).expect("generated hierarchy is valid")
    }

    /// Small named taxonomy: two groups of three leaves.
    pub fn toy() -> Self {
        let text = "Name\t-\n\
                    Location\tName\n\
                    City\tLocation\n\
                    Country\tLocation\n\
                    River\tLocation\n\
                    Product\tName\n\
                    Book\tProduct\n\
                    Food\tProduct\n\
                    Award\tProduct\n";
        Self::read(text.as_bytes()).expect("toy hierarchy is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn root(&self) -> ClassId {
        self.root
    }

    pub fn name(&self, c: ClassId) -> &str {
        &self.names[c]
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.index.get(name).copied()
    }

    pub fn parent(&self, c: ClassId) -> Option<ClassId> {
        self.parent[c]
    }

    pub fn children(&self, c: ClassId) -> &[ClassId] {
        &self.children[c]
    }

    pub fn depth(&self, c: ClassId) -> usize {
        self.depth[c]
    }

    pub fn is_leaf(&self, c: ClassId) -> bool {
        self.children[c].is_empty()
    }

    /// All classes in pre-order.
    pub fn preorder(&self) -> &[ClassId] {
        &self.preorder
    }

    /// Leaves in pre-order.
    pub fn leaves(&self) -> Vec<ClassId> {
        self.preorder.iter().copied().filter(|&c| self.is_leaf(c)).collect()
    }

    /// Number of classes at each depth.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let max = self.depth.iter().copied().max().unwrap_or(0);
        let mut hist = vec![0; max + 1];
        for &d in &self.depth {
            hist[d] += 1;
        }
        hist
    }

    fn check(&self, c: ClassId) -> Result<()> {
        if c < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownClass(format!("#{c}")))
        }
    }

    fn check_leaf(&self, c: ClassId) -> Result<()> {
        self.check(c)?;
        if self.is_leaf(c) {
            Ok(())
        } else {
            Err(Error::NotLeaf(self.names[c].clone()))
        }
    }

    pub fn lca(&self, a: ClassId, b: ClassId) -> Result<ClassId> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.lca_unchecked(a, b))
    }

    fn lca_unchecked(&self, mut a: ClassId, mut b: ClassId) -> ClassId {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].unwrap();
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].unwrap();
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        a
    }

    /// Three-level weight: same class, same parent group, or unrelated.
    pub fn wmean1_weight(&self, a: ClassId, b: ClassId) -> Result<f64> {
        self.check_leaf(a)?;
        self.check_leaf(b)?;
        Ok(self.wmean1_unchecked(a, b))
    }

    fn wmean1_unchecked(&self, a: ClassId, b: ClassId) -> f64 {
        if a == b {
            SAME_CLASS_WEIGHT
        } else if self.parent[a].is_some() && self.parent[a] == self.parent[b] {
            SIBLING_CLASS_WEIGHT
        } else {
            DISTANT_CLASS_WEIGHT
        }
    }

    /// `1 / (1 + d)` where `d` counts tree edges from the center class `a` up to `lca(a, b)`.
    pub fn wmean2_weight(&self, a: ClassId, b: ClassId) -> Result<f64> {
        self.wmean2_weight_with(a, b, LcaDistance::Center)
    }

    pub fn wmean2_weight_with(&self, a: ClassId, b: ClassId, measure: LcaDistance) -> Result<f64> {
        self.check_leaf(a)?;
        self.check_leaf(b)?;
        Ok(self.wmean2_unchecked(a, b, measure))
    }

    fn wmean2_unchecked(&self, a: ClassId, b: ClassId, measure: LcaDistance) -> f64 {
        let l = self.depth[self.lca_unchecked(a, b)];
        let (da, db) = (self.depth[a] - l, self.depth[b] - l);
        let d = match measure {
            LcaDistance::Center => da,
            LcaDistance::Neighbour => db,
            LcaDistance::Max => da.max(db),
        };
        1.0 / (1.0 + d as f64)
    }
}

/// Which endpoint's distance to the lowest common ancestor drives the continuous weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LcaDistance {
    #[default]
    Center,
    Neighbour,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    #[default]
    Uniform,
    Wmean1,
    Wmean2,
}

/// How neighbours are weighted in the aggregation mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPolicy {
    pub kind: WeightKind,
    /// Weight used when either label is unknown; must lie in (0, 1].
    pub unknown_label_weight: f64,
    #[serde(default)]
    pub lca_distance: LcaDistance,
}

impl Default for WeightPolicy {
    fn default() -> Self {
        WeightPolicy {
            kind: WeightKind::Uniform,
            unknown_label_weight: 0.5,
            lca_distance: LcaDistance::Center,
        }
    }
}

impl WeightPolicy {
    pub fn new(kind: WeightKind) -> Self {
        WeightPolicy {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.unknown_label_weight;
        if w > 0.0 && w <= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown_label_weight must be in (0, 1], got {w}")))
        }
    }

    /// Weight of a neighbour labeled `nbr` around a center labeled `center`.
    ///
    /// Labels are expected to be leaves of `h`; any missing label yields
    /// `unknown_label_weight`.
    pub fn neighbour_weight(
        &self,
        h: &LabelHierarchy,
        center: Option<ClassId>,
        nbr: Option<ClassId>,
    ) -> f64 {
        match (self.kind, center, nbr) {
            (WeightKind::Uniform, _, _) => 1.0,
            (WeightKind::Wmean1, Some(a), Some(b)) => h.wmean1_unchecked(a, b),
            (WeightKind::Wmean2, Some(a), Some(b)) => h.wmean2_unchecked(a, b, self.lca_distance),
            _ => self.unknown_label_weight,
        }
    }
}
