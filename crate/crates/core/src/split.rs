//! Train/validation/test node split and the three evaluation graphs.
//!
//! * training graph: induced on the training nodes;
//! * validation graph: induced on training ∪ validation nodes, minus every
//!   validation–validation edge;
//! * test graph: the whole graph minus every test–test edge.
//!
//! Roles are drawn uniformly at random and redrawn until the graphs meet the
//! connectivity requirement.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, IdMap, NodeId};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Val,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Val => "val",
            Role::Test => "test",
        }
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Role::Train),
            "val" => Ok(Role::Val),
            "test" => Ok(Role::Test),
            other => Err(Error::Config(format!("unknown role `{other}`"))),
        }
    }
}

/// Target fractions of train, validation and test nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for Fractions {
    fn default() -> Self {
        Fractions {
            train: 0.7,
            val: 0.2,
            test: 0.1,
        }
    }
}

impl Fractions {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|f| !(0.0..=1.0).contains(f)) || ((all.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "fractions must be non-negative and sum to 1, got {}/{}/{}",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }

    /// `(train, val, test)` node counts: test and validation rounded, training takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let test = (self.test * n as f64).round() as usize;
        let val = ((self.val * n as f64).round() as usize).min(n - test);
        (n - test - val, val, test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    /// Training graph connected; every validation and test node keeps an edge.
    #[default]
    Relaxed,
    /// All three graphs connected.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub fractions: Fractions,
    pub seed: u64,
    pub max_retries: usize,
    pub connectivity: Connectivity,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            fractions: Fractions::default(),
            seed: 0,
            max_retries: 1000,
            connectivity: Connectivity::Relaxed,
        }
    }
}

/// Role of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    pub roles: Vec<Role>,
    pub fractions: Fractions,
    pub seed: u64,
    /// Zero-based attempt that produced this assignment.
    pub attempt: usize,
}

impl SplitAssignment {
    pub fn nodes(&self, role: Role) -> Vec<NodeId> {
        (0..self.roles.len()).filter(|&u| self.roles[u] == role).collect()
    }

    pub fn count(&self, role: Role) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (u, r) in self.roles.iter().enumerate() {
            writeln!(w, "{u}\t{}", r.as_str())?;
        }
        Ok(())
    }

    /// Reads `node_id<TAB>role` lines covering `0..n`.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut roles: Vec<Option<Role>> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, role) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected `node_id<TAB>role`"))?;
            let id: usize = id.parse().map_err(|_| Error::parse(i + 1, format!("bad node id `{id}`")))?;
            let role: Role = role.parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
            if roles.len() <= id {
                roles.resize(id + 1, None);
            }
            roles[id] = Some(role);
        }
        let roles = roles
            .into_iter()
            .enumerate()
            .map(|(u, r)| r.ok_or_else(|| Error::Config(format!("split file has no role for node {u}"))))
            .collect::<Result<Vec<_>>>()?;
        let n = roles.len().max(1) as f64;
        let count = |role| roles.iter().filter(|&&r| r == role).count() as f64 / n;
        Ok(SplitAssignment {
            fractions: Fractions {
                train: count(Role::Train),
                val: count(Role::Val),
                test: count(Role::Test),
            },
            roles,
            seed: 0,
            attempt: 0,
        })
    }
}

/// One of the three derived graphs, in the original id space.
///
/// `graph` keeps all `n` ids so features and labels index directly; nodes
/// outside `nodes` have no edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitView {
    pub graph: Graph,
    pub nodes: Vec<NodeId>,
}

impl SplitView {
    /// Standalone graph on `nodes`, relabeled densely.
    pub fn compact(&self) -> (Graph, IdMap) {
        self.graph.induced_subgraph(&self.nodes)
    }

    pub fn is_connected(&self) -> bool {
        self.compact().0.is_connected()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitGraphs {
    pub train: SplitView,
    pub val: SplitView,
    pub test: SplitView,
}

pub fn build_split_graphs(g: &Graph, s: &SplitAssignment) -> Result<SplitGraphs> {
    if s.roles.len() != g.node_count() {
        return Err(Error::RowMismatch {
            expected: g.node_count(),
            found: s.roles.len(),
        });
    }
    let r = &s.roles;
    let members = |keep: &dyn Fn(Role) -> bool| (0..r.len()).filter(|&u| keep(r[u])).collect::<Vec<_>>();
    let train = SplitView {
        graph: g.filter_edges(|u, v| r[u] == Role::Train && r[v] == Role::Train),
        nodes: members(&|x| x == Role::Train),
    };
    let val = SplitView {
        graph: g.filter_edges(|u, v| {
            r[u] != Role::Test && r[v] != Role::Test && !(r[u] == Role::Val && r[v] == Role::Val)
        }),
        nodes: members(&|x| x != Role::Test),
    };
    let test = SplitView {
        graph: g.filter_edges(|u, v| !(r[u] == Role::Test && r[v] == Role::Test)),
        nodes: (0..r.len()).collect(),
    };
    Ok(SplitGraphs { train, val, test })
}

/// Outcome of the connectivity checks for one assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub train_components: usize,
    pub val_components: usize,
    pub test_components: usize,
    pub isolated_val: usize,
    pub isolated_test: usize,
}

impl ConnectivityReport {
    pub fn of(graphs: &SplitGraphs, s: &SplitAssignment) -> Self {
        let isolated = |view: &SplitView, role| {
            (0..s.roles.len())
                .filter(|&u| s.roles[u] == role && view.graph.neighbors(u).is_empty())
                .count()
        };
        ConnectivityReport {
            train_components: graphs.train.compact().0.components().1,
            val_components: graphs.val.compact().0.components().1,
            test_components: graphs.test.compact().0.components().1,
            isolated_val: isolated(&graphs.val, Role::Val),
            isolated_test: isolated(&graphs.test, Role::Test),
        }
    }

    pub fn satisfies(&self, mode: Connectivity) -> bool {
        let relaxed = self.train_components == 1 && self.isolated_val == 0 && self.isolated_test == 0;
        match mode {
            Connectivity::Relaxed => relaxed,
            Connectivity::Strict => relaxed && self.val_components == 1 && self.test_components == 1,
        }
    }

    /// Lower is closer to satisfying the constraint.
    fn violation(&self, mode: Connectivity) -> usize {
        let mut v = self.train_components.saturating_sub(1) + self.isolated_val + self.isolated_test;
        if mode == Connectivity::Strict {
            v += self.val_components.saturating_sub(1) + self.test_components.saturating_sub(1);
        }
        v
    }
}

/// Every attempt failed; carries the least-violating one.
#[derive(Debug, Clone)]
pub struct SplitFailure {
    pub attempts: usize,
    pub best: SplitAssignment,
    pub report: ConnectivityReport,
}

impl fmt::Display for SplitFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no split met the connectivity requirement in {} attempts; best attempt {} had {} training components, {} isolated validation and {} isolated test nodes",
            self.attempts,
            self.best.attempt,
            self.report.train_components,
            self.report.isolated_val,
            self.report.isolated_test
        )
    }
}

impl std::error::Error for SplitFailure {}

/// Draws one uniformly random assignment for attempt `attempt`.
fn draw(n: usize, cfg: &SplitConfig, attempt: usize) -> SplitAssignment {
    let (_, val, test) = cfg.fractions.sizes(n);
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut rng::indexed_stream(cfg.seed, rng::SPLIT, attempt as u64));
    let mut roles = vec![Role::Train; n];
    for &u in &order[..test] {
        roles[u] = Role::Test;
    }
    for &u in &order[test..test + val] {
        roles[u] = Role::Val;
    }
    SplitAssignment {
        roles,
        fractions: cfg.fractions,
        seed: cfg.seed,
        attempt,
    }
}

/// Rejection-samples a split whose graphs meet `cfg.connectivity`.
///
/// Attempt `i` uses the `i`-th split sub-stream, so the accepted assignment
/// is the first success by attempt index.
pub fn make_split(g: &Graph, cfg: &SplitConfig) -> Result<SplitAssignment> {
    cfg.fractions.validate()?;
    let n = g.node_count();
    if n < 10 {
        return Err(Error::Config(format!("splitting needs at least 10 nodes, got {n}")));
    }
    let mut best: Option<(usize, SplitAssignment, ConnectivityReport)> = None;
    for attempt in 0..cfg.max_retries.max(1) {
        let s = draw(n, cfg, attempt);
        let graphs = build_split_graphs(g, &s)?;
        let report = ConnectivityReport::of(&graphs, &s);
        if report.satisfies(cfg.connectivity) {
            return Ok(s);
        }
        let v = report.violation(cfg.connectivity);
        if best.as_ref().is_none_or(|(bv, _, _)| v < *bv) {
            best = Some((v, s, report));
        }
    }
    let (_, best, report) = best.expect("at least one attempt");
    Err(Error::Split(Box::new(SplitFailure {
        attempts: cfg.max_retries.max(1),
        best,
        report,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{complete, graph};
    use proptest::prelude::*;

    fn assignment(roles: &[Role]) -> SplitAssignment {
        SplitAssignment {
            roles: roles.to_vec(),
            fractions: Fractions::default(),
            seed: 0,
            attempt: 0,
        }
    }

    #[test]
    fn sizes_follow_fractions() {
        let f = Fractions::default();
        assert_eq!(f.sizes(100), (70, 20, 10));
        assert_eq!(f.sizes(10), (7, 2, 1));
        assert_eq!(f.sizes(1000), (700, 200, 100));
        assert!(Fractions { train: 0.5, val: 0.2, test: 0.1 }.validate().is_err());
    }

    #[test]
    fn path_graph_constructions() {
        use Role::*;
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let sg = build_split_graphs(&g, &assignment(&[Train, Train, Val, Test])).unwrap();
        assert_eq!(sg.train.graph.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(sg.train.nodes, vec![0, 1]);
        assert_eq!(sg.val.graph.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(sg.val.nodes, vec![0, 1, 2]);
        assert_eq!(sg.test.graph, g);
        assert_eq!(sg.test.nodes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn all_train_keeps_everything() {
        let g = complete(4);
        let sg = build_split_graphs(&g, &assignment(&[Role::Train; 4])).unwrap();
        assert_eq!(sg.train.graph, g);
        assert_eq!(sg.val.graph, g);
        assert_eq!(sg.test.graph, g);
    }

    #[test]
    fn test_test_edge_removed() {
        use Role::*;
        let g = graph(3, &[(0, 1), (1, 2)]);
        let sg = build_split_graphs(&g, &assignment(&[Train, Test, Test])).unwrap();
        assert!(!sg.test.graph.has_edge(1, 2));
        assert!(sg.test.graph.has_edge(0, 1));
    }

    #[test]
    fn make_split_sizes_and_determinism() {
        let g = complete(100);
        let cfg = SplitConfig { seed: 3, ..Default::default() };
        let s = make_split(&g, &cfg).unwrap();
        assert_eq!((s.count(Role::Train), s.count(Role::Val), s.count(Role::Test)), (70, 20, 10));
        assert_eq!(s, make_split(&g, &cfg).unwrap());
        let s10 = make_split(&complete(10), &cfg).unwrap();
        assert_eq!((s10.count(Role::Train), s10.count(Role::Val), s10.count(Role::Test)), (7, 2, 1));
    }

    #[test]
    fn unreachable_connectivity_reports_best_attempt() {
        // A perfect matching can never keep 70% of nodes connected.
        let g = graph(20, &(0..10).map(|i| (2 * i, 2 * i + 1)).collect::<Vec<_>>());
        let cfg = SplitConfig { max_retries: 5, ..Default::default() };
        match make_split(&g, &cfg) {
            Err(Error::Split(f)) => {
                assert_eq!(f.attempts, 5);
                assert!(f.report.train_components > 1);
                assert_eq!(f.best.roles.len(), 20);
            }
            other => panic!("expected split failure, got {other:?}"),
        }
        assert!(make_split(&complete(5), &SplitConfig::default()).is_err());
    }

    #[test]
    fn file_round_trip() {
        use Role::*;
        let s = assignment(&[Train, Val, Test, Train]);
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0\ttrain\n1\tval\n2\ttest\n3\ttrain\n");
        assert_eq!(SplitAssignment::read(buf.as_slice()).unwrap().roles, s.roles);
    }

    proptest! {
        #[test]
        fn split_graph_invariants(
            edges in proptest::collection::vec((0usize..15, 0usize..15), 0..60),
            roles in proptest::collection::vec(0u8..3, 15),
        ) {
            let g = Graph::from_edges(15, edges).unwrap();
            let roles: Vec<Role> = roles.iter().map(|r| [Role::Train, Role::Val, Role::Test][*r as usize]).collect();
            let s = assignment(&roles);
            let sg = build_split_graphs(&g, &s).unwrap();
            let tr: Vec<_> = sg.train.graph.edges().collect();
            let va: Vec<_> = sg.val.graph.edges().collect();
            let te: Vec<_> = sg.test.graph.edges().collect();
            prop_assert!(tr.iter().all(|e| va.contains(e)));
            prop_assert!(va.iter().all(|e| te.contains(e)));
            prop_assert!(te.iter().all(|&(u, v)| g.has_edge(u, v)));
            for &(u, v) in &va {
                prop_assert!(!(roles[u] == Role::Val && roles[v] == Role::Val));
                prop_assert!(roles[u] != Role::Test && roles[v] != Role::Test);
            }
            for &(u, v) in &te {
                prop_assert!(!(roles[u] == Role::Test && roles[v] == Role::Test));
            }
            for u in 0..15 {
                if roles[u] == Role::Val {
                    prop_assert!(sg.val.graph.neighbors(u).iter().all(|&v| roles[v] == Role::Train));
                }
                if roles[u] == Role::Test {
                    prop_assert!(sg.test.graph.neighbors(u).iter().all(|&v| roles[v] != Role::Test));
                }
            }
        }

        #[test]
        fn role_sizes_do_not_depend_on_ids(n in 10usize..200, seed in 0u64..100) {
            let f = Fractions::default();
            let s = draw(n, &SplitConfig { seed, ..Default::default() }, 0);
            let (tr, va, te) = f.sizes(n);
            prop_assert_eq!((s.count(Role::Train), s.count(Role::Val), s.count(Role::Test)), (tr, va, te));
        }
    }
}
