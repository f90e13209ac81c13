//! Stochastic-block-model graphs whose block structure follows a two-level
//! label hierarchy.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::features::{ColumnKind, FeatureMatrix};
use crate::graph::{Graph, NodeId};
use crate::hierarchy::{ClassId, LabelHierarchy};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassSizes {
    Uniform,
    /// Class `i` (in leaf order) gets weight `ratio^i`.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub groups: usize,
    pub leaves_per_group: usize,
    pub nodes: usize,
    pub sizes: ClassSizes,
    pub p_same: f64,
    pub p_sibling: f64,
    pub p_far: f64,
    /// The largest `star_classes` classes also attach to every class.
    pub star_classes: usize,
    pub p_star: f64,
    /// Reject configurations where some class expects fewer than one neighbour.
    pub strict: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            groups: 2,
            leaves_per_group: 3,
            nodes: 1200,
            sizes: ClassSizes::Geometric { ratio: 0.8 },
            p_same: 0.02,
            p_sibling: 0.008,
            p_far: 0.002,
            star_classes: 1,
            p_star: 0.004,
            strict: false,
            seed: 0,
        }
    }
}

fn probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
    }
}

impl SynthConfig {
    pub fn classes(&self) -> usize {
        self.groups * self.leaves_per_group
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.leaves_per_group == 0 {
            return Err(Error::Config("need at least one group and one leaf per group".into()));
        }
        if self.nodes < self.classes() {
            return Err(Error::Config(format!(
                "{} nodes cannot populate {} classes",
                self.nodes,
                self.classes()
            )));
        }
        for (name, p) in [
            ("p_same", self.p_same),
            ("p_sibling", self.p_sibling),
            ("p_far", self.p_far),
            ("p_star", self.p_star),
        ] {
            probability(name, p)?;
        }
        if !(self.p_same >= self.p_sibling && self.p_sibling >= self.p_far) {
            return Err(Error::Config("edge probabilities must satisfy p_same ≥ p_sibling ≥ p_far".into()));
        }
        if let ClassSizes::Geometric { ratio } = self.sizes {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Error::Config(format!("geometric ratio must lie in (0, 1], got {ratio}")));
            }
        }
        if self.star_classes > self.classes() {
            return Err(Error::Config("more star classes than classes".into()));
        }
        Ok(())
    }

    /// Node count of each class in leaf order: largest remainder over the
    /// size weights, then every class topped up to at least one node.
    pub fn class_sizes(&self) -> Vec<usize> {
        let k = self.classes();
        let weights: Vec<f64> = match self.sizes {
            ClassSizes::Uniform => vec![1.0; k],
            ClassSizes::Geometric { ratio } => (0..k).map(|i| ratio.powi(i as i32)).collect(),
        };
        let total: f64 = weights.iter().sum();
        let exact: Vec<f64> = weights.iter().map(|w| w / total * self.nodes as f64).collect();
        let mut sizes: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
        let missing = self.nodes - sizes.iter().sum::<usize>();
        for &i in order.iter().take(missing) {
            sizes[i] += 1;
        }
        for i in 0..k {
            if sizes[i] == 0 {
                let donor = (0..k).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).unwrap();
                sizes[donor] -= 1;
                sizes[i] = 1;
            }
        }
        sizes
    }

    pub fn is_star(&self, class: usize) -> bool {
        class < self.star_classes
    }

    /// Edge probability between classes `a` and `b` (leaf-order indices).
    pub fn pair_probability(&self, a: usize, b: usize) -> f64 {
        let l = self.leaves_per_group;
        let base = if a == b {
            self.p_same
        } else if a / l == b / l {
            self.p_sibling
        } else {
            self.p_far
        };
        if self.is_star(a) || self.is_star(b) {
            base.max(self.p_star)
        } else {
            base
        }
    }

    /// Expected degree of a node of each class.
    pub fn expected_degrees(&self) -> Vec<f64> {
        let sizes = self.class_sizes();
        (0..sizes.len())
            .map(|a| {
                (0..sizes.len())
                    .map(|b| {
                        let others = if a == b { sizes[b].saturating_sub(1) } else { sizes[b] };
                        others as f64 * self.pair_probability(a, b)
                    })
                    .sum()
            })
            .collect()
    }
}

/// Labelled synthetic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthGraph {
    pub graph: Graph,
    pub labels: Vec<Option<ClassId>>,
    pub hierarchy: LabelHierarchy,
}

/// Visits each included index of `0..len` where every index is kept with probability `p`.
fn bernoulli_indices(len: u64, p: f64, r: &mut rng::Rng, mut visit: impl FnMut(u64)) {
    if p <= 0.0 || len == 0 {
        return;
    }
    if p >= 1.0 {
        (0..len).for_each(visit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut i: u64 = 0;
    loop {
        let u: f64 = r.gen_range(f64::MIN_POSITIVE..1.0);
        let skip = (u.ln() / log_q).floor();
        if skip >= (len - i) as f64 {
            return;
        }
        i += skip as u64;
        visit(i);
        i += 1;
        if i >= len {
            return;
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthGraph> {
    cfg.validate()?;
    if cfg.strict {
        if let Some((c, d)) = cfg.expected_degrees().into_iter().enumerate().find(|&(_, d)| d < 1.0) {
            return Err(Error::Config(format!("class {c} expects degree {d:.3} < 1")));
        }
    }
    let hierarchy = LabelHierarchy::grouped(cfg.groups, cfg.leaves_per_group);
    let leaves = hierarchy.leaves();
    let sizes = cfg.class_sizes();
    let k = sizes.len();

    let mut class_of: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
    class_of.shuffle(&mut rng::stream(cfg.seed, rng::SYNTH));
    let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); k];
    for (u, &c) in class_of.iter().enumerate() {
        members[c].push(u);
    }

    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let block = |&(a, b): &(usize, usize)| -> Vec<(NodeId, NodeId)> {
        let mut r = rng::indexed_stream(cfg.seed, "synth-block", (a * k + b) as u64);
        let (ma, mb) = (&members[a], &members[b]);
        let nb = mb.len() as u64;
        let mut out = Vec::new();
        bernoulli_indices(ma.len() as u64 * nb, cfg.pair_probability(a, b), &mut r, |idx| {
            let (i, j) = ((idx / nb) as usize, (idx % nb) as usize);
            // within a block only the upper triangle is used
            if a != b || i < j {
                out.push((ma[i], mb[j]));
            }
        });
        out
    };
    #[cfg(feature = "parallel")]
    let blocks: Vec<Vec<(NodeId, NodeId)>> = {
        use rayon::prelude::*;
        pairs.par_iter().map(block).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<Vec<(NodeId, NodeId)>> = pairs.iter().map(block).collect();

    let graph = Graph::from_edges(cfg.nodes, blocks.into_iter().flatten())?;
    let labels = class_of.iter().map(|&c| Some(leaves[c])).collect();
    Ok(SynthGraph { graph, labels, hierarchy })
}

/// Depth-1 ancestor of `c` (the class itself when it sits right below the root).
pub fn group_of(h: &LabelHierarchy, mut c: ClassId) -> ClassId {
    while let Some(p) = h.parent(c) {
        if p == h.root() {
            return c;
        }
        c = p;
    }
    c
}

/// Mean fraction of labelled neighbours sharing the leaf class, and the group,
/// over labelled nodes with at least one labelled neighbour.
pub fn empirical_homophily(g: &Graph, labels: &[Option<ClassId>], h: &LabelHierarchy) -> (f64, f64) {
    let (mut leaf, mut group, mut counted) = (0.0, 0.0, 0usize);
    for u in 0..g.node_count() {
        let Some(cu) = labels.get(u).copied().flatten() else { continue };
        let gu = group_of(h, cu);
        let (mut same, mut same_group, mut total) = (0usize, 0usize, 0usize);
        for &v in g.neighbors(u) {
            if let Some(cv) = labels.get(v).copied().flatten() {
                total += 1;
                same += usize::from(cv == cu);
                same_group += usize::from(group_of(h, cv) == gu);
            }
        }
        if total > 0 {
            leaf += same as f64 / total as f64;
            group += same_group as f64 / total as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        return (0.0, 0.0);
    }
    (leaf / counted as f64, group / counted as f64)
}

/// One-hot of each node's group, correct with probability `accuracy` and
/// otherwise a uniformly drawn other group. Unlabelled nodes get a zero row.
pub fn group_attributes(labels: &[Option<ClassId>], h: &LabelHierarchy, accuracy: f64, seed: u64) -> Result<FeatureMatrix> {
    probability("attribute accuracy", accuracy)?;
    let groups: Vec<ClassId> = h.children(h.root()).to_vec();
    let mut values = Array2::zeros((labels.len(), groups.len()));
    let mut r = rng::stream(seed, "attributes");
    for (u, label) in labels.iter().enumerate() {
        let Some(c) = *label else { continue };
        let truth = groups.iter().position(|&g| g == group_of(h, c)).expect("group below root");
        let mut pick = truth;
        if groups.len() > 1 && !r.gen_bool(accuracy) {
            pick = r.gen_range(0..groups.len() - 1);
            if pick >= truth {
                pick += 1;
            }
        }
        values[[u, pick]] = 1.0;
    }
    let names = groups.iter().map(|&g| format!("attr_{}", h.name(g))).collect();
    FeatureMatrix::new(names, vec![ColumnKind::OneHot; groups.len()], values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::label_distribution;

    fn cfg() -> SynthConfig {
        SynthConfig::default()
    }

    #[test]
    fn limit_case_disjoint_triangles() {
        let c = SynthConfig {
            groups: 2,
            leaves_per_group: 1,
            nodes: 6,
            sizes: ClassSizes::Uniform,
            p_same: 1.0,
            p_sibling: 0.0,
            p_far: 0.0,
            star_classes: 0,
            ..cfg()
        };
        let s = generate(&c).unwrap();
        assert_eq!(s.graph.edge_count(), 6);
        assert_eq!(s.graph.components().1, 2);
        assert!(s.graph.degrees().iter().all(|&d| d == 2));
        assert_eq!(empirical_homophily(&s.graph, &s.labels, &s.hierarchy), (1.0, 1.0));
    }

    #[test]
    fn geometric_sizes() {
        let c = SynthConfig {
            sizes: ClassSizes::Geometric { ratio: 0.7 },
            ..cfg()
        };
        let sizes = c.class_sizes();
        assert_eq!(sizes.iter().sum::<usize>(), 1200);
        let expected = 1200.0 * 0.3 / (1.0 - 0.7f64.powi(6));
        assert!((sizes[0] as f64 - expected).abs() <= 1.0);
        assert!(sizes.windows(2).all(|w| w[0] > w[1]));
        let s = generate(&c).unwrap();
        let counts: Vec<usize> = label_distribution(&s.labels, &s.hierarchy).iter().map(|c| c.count).collect();
        assert_eq!(counts, sizes);
    }

    #[test]
    fn generated_graph_is_valid_and_deterministic() {
        let a = generate(&cfg()).unwrap();
        assert!(a.graph.check_invariants());
        assert_eq!(a, generate(&cfg()).unwrap());
        let b = generate(&SynthConfig { seed: 1, ..cfg() }).unwrap();
        assert_ne!(a.graph, b.graph);
        let (leaf, group) = empirical_homophily(&a.graph, &a.labels, &a.hierarchy);
        assert!(leaf > 0.4 && group > leaf);
    }

    #[test]
    fn intra_class_density_matches_p_same() {
        let c = SynthConfig {
            nodes: 2000,
            sizes: ClassSizes::Uniform,
            star_classes: 0,
            seed: 3,
            ..cfg()
        };
        let s = generate(&c).unwrap();
        let sizes = c.class_sizes();
        let pairs: f64 = sizes.iter().map(|&m| (m * (m - 1) / 2) as f64).sum();
        let intra = s.graph.edges().filter(|&(u, v)| s.labels[u] == s.labels[v]).count() as f64;
        let sd = (pairs * c.p_same * (1.0 - c.p_same)).sqrt();
        assert!((intra - pairs * c.p_same).abs() < 3.0 * sd, "{intra} vs {}", pairs * c.p_same);
    }

    #[test]
    fn homogeneous_probabilities_give_chance_homophily() {
        let c = SynthConfig {
            nodes: 1800,
            sizes: ClassSizes::Uniform,
            p_same: 0.01,
            p_sibling: 0.01,
            p_far: 0.01,
            star_classes: 0,
            ..cfg()
        };
        let s = generate(&c).unwrap();
        let (leaf, _) = empirical_homophily(&s.graph, &s.labels, &s.hierarchy);
        assert!((leaf - 1.0 / 6.0).abs() < 0.03, "{leaf}");
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate(&SynthConfig { nodes: 5, ..cfg() }).is_err());
        assert!(generate(&SynthConfig { p_far: 0.5, ..cfg() }).is_err());
        assert!(generate(&SynthConfig {
            sizes: ClassSizes::Geometric { ratio: 0.0 },
            ..cfg()
        })
        .is_err());
        let sparse = SynthConfig {
            p_same: 0.0001,
            p_sibling: 0.0,
            p_far: 0.0,
            star_classes: 0,
            strict: true,
            ..cfg()
        };
        assert!(generate(&sparse).is_err());
        assert!(generate(&SynthConfig { strict: false, ..sparse }).is_ok());
    }

    #[test]
    fn attributes_follow_groups() {
        let s = generate(&cfg()).unwrap();
        let exact = group_attributes(&s.labels, &s.hierarchy, 1.0, 0).unwrap();
        for (u, l) in s.labels.iter().enumerate() {
            let g = group_of(&s.hierarchy, l.unwrap());
            let col = s.hierarchy.children(s.hierarchy.root()).iter().position(|&x| x == g).unwrap();
            assert_eq!(exact.values()[[u, col]], 1.0);
        }
        let noisy = group_attributes(&s.labels, &s.hierarchy, 0.8, 0).unwrap();
        let agree = (0..s.labels.len()).filter(|&u| noisy.row(u) == exact.row(u)).count() as f64 / 1200.0;
        assert!((agree - 0.8).abs() < 0.05, "{agree}");
    }
}
