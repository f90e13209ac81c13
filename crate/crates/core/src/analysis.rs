//! Label-structure statistics: how neighbourhoods mix classes and how
//! skewed the class sizes are.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::format_g;
use crate::graph::Graph;
use crate::hierarchy::{ClassId, LabelHierarchy};

/// Share of each leaf class among the neighbours of nodes of each leaf class.
///
/// Rows and columns follow the hierarchy's leaf pre-order. Rows without any
/// labelled neighbour are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourhoodLabelMatrix {
    pub classes: Vec<ClassId>,
    pub names: Vec<String>,
    pub values: Array2<f64>,
    /// Number of (labelled node, labelled neighbour) pairs behind each row.
    pub support: Vec<usize>,
}

impl NeighbourhoodLabelMatrix {
    pub fn row_sum(&self, i: usize) -> f64 {
        self.values.row(i).sum()
    }

    /// Whether row `i` reaches its maximum on the diagonal.
    pub fn diagonal_is_max(&self, i: usize) -> bool {
        let row = self.values.row(i);
        row.iter().all(|&x| x <= row[i])
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "class")?;
        for name in &self.names {
            write!(w, "\t{name}")?;
        }
        writeln!(w)?;
        for (name, row) in self.names.iter().zip(self.values.rows()) {
            write!(w, "{name}")?;
            for &x in row {
                write!(w, "\t{}", format_g(x, 10))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn neighbourhood_label_matrix(g: &Graph, labels: &[Option<ClassId>], h: &LabelHierarchy) -> NeighbourhoodLabelMatrix {
    let classes = h.leaves();
    let mut pos = vec![None; h.len()];
    for (i, &c) in classes.iter().enumerate() {
        pos[c] = Some(i);
    }
    let index = |u: usize| labels.get(u).copied().flatten().and_then(|c| pos.get(c).copied().flatten());
    let k = classes.len();
    let mut counts = Array2::<f64>::zeros((k, k));
    let mut support = vec![0usize; k];
    for u in 0..g.node_count() {
        let Some(i) = index(u) else { continue };
        for &v in g.neighbors(u) {
            if let Some(j) = index(v) {
                counts[[i, j]] += 1.0;
                support[i] += 1;
            }
        }
    }
    for (mut row, &s) in counts.rows_mut().into_iter().zip(&support) {
        if s > 0 {
            row /= s as f64;
        }
    }
    NeighbourhoodLabelMatrix {
        names: classes.iter().map(|&c| h.name(c).to_owned()).collect(),
        classes,
        values: counts,
        support,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub class: String,
    pub count: usize,
}

/// Nodes per class, largest first; ties by class id.
pub fn label_distribution(labels: &[Option<ClassId>], h: &LabelHierarchy) -> Vec<ClassCount> {
    let mut counts = vec![0usize; h.len()];
    for c in labels.iter().flatten() {
        if let Some(x) = counts.get_mut(*c) {
            *x += 1;
        }
    }
    let mut out: Vec<(ClassId, usize)> = counts.into_iter().enumerate().filter(|&(_, n)| n > 0).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    out.into_iter()
        .map(|(c, count)| ClassCount {
            class: h.name(c).to_owned(),
            count,
        })
        .collect()
}

/// `hist[k]` = number of nodes whose labelled neighbours carry exactly `k` distinct labels.
pub fn distinct_labels_per_node(g: &Graph, labels: &[Option<ClassId>]) -> Vec<usize> {
    let mut hist = vec![0usize; 1];
    let mut seen: Vec<ClassId> = Vec::new();
    for u in 0..g.node_count() {
        seen.clear();
        seen.extend(g.neighbors(u).iter().filter_map(|&v| labels.get(v).copied().flatten()));
        seen.sort_unstable();
        seen.dedup();
        let k = seen.len();
        if hist.len() <= k {
            hist.resize(k + 1, 0);
        }
        hist[k] += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{complete, graph, star};

    fn abc() -> LabelHierarchy {
        LabelHierarchy::from_pairs(&[("r", None), ("a", Some("r")), ("b", Some("r")), ("c", Some("r"))]).unwrap()
    }

    fn ids(h: &LabelHierarchy, names: &[&str]) -> Vec<Option<ClassId>> {
        names.iter().map(|n| h.class_id(n)).collect()
    }

    #[test]
    fn single_edge() {
        let h = abc();
        let m = neighbourhood_label_matrix(&graph(2, &[(0, 1)]), &ids(&h, &["a", "b"]), &h);
        assert_eq!(m.values[[0, 1]], 1.0);
        assert_eq!(m.values[[1, 0]], 1.0);
        assert_eq!(m.values[[0, 0]], 0.0);
        assert_eq!(m.row_sum(2), 0.0);
    }

    #[test]
    fn monochrome_triangle() {
        let h = abc();
        let m = neighbourhood_label_matrix(&complete(3), &ids(&h, &["a", "a", "a"]), &h);
        assert_eq!(m.values[[0, 0]], 1.0);
        assert!(m.diagonal_is_max(0));
    }

    #[test]
    fn star_row() {
        let h = abc();
        let m = neighbourhood_label_matrix(&star(4), &ids(&h, &["a", "b", "b", "b", "c"]), &h);
        assert_eq!(m.values.row(0).to_vec(), vec![0.0, 0.75, 0.25]);
        let mut tsv = Vec::new();
        m.write_tsv(&mut tsv).unwrap();
        let text = String::from_utf8(tsv).unwrap();
        assert_eq!(text.lines().next().unwrap(), "class\ta\tb\tc");
        assert_eq!(text.lines().nth(1).unwrap(), "a\t0\t0.75\t0.25");
    }

    #[test]
    fn distribution() {
        let h = abc();
        let d = label_distribution(&ids(&h, &["a", "a", "b"]), &h);
        assert_eq!(d, vec![ClassCount { class: "a".into(), count: 2 }, ClassCount { class: "b".into(), count: 1 }]);
        assert!(label_distribution(&[], &h).is_empty());
        assert_eq!(label_distribution(&ids(&h, &["c", "c"]), &h).len(), 1);
        // ties by class id
        let d = label_distribution(&ids(&h, &["c", "b"]), &h);
        assert_eq!(d[0].class, "b");
    }

    #[test]
    fn distinct_histogram() {
        let h = abc();
        let hist = distinct_labels_per_node(&star(3), &ids(&h, &["a", "b", "b", "c"]));
        assert_eq!(hist, vec![0, 3, 1]);
        assert_eq!(distinct_labels_per_node(&graph(1, &[]), &[None]), vec![1]);
        assert_eq!(distinct_labels_per_node(&complete(4), &ids(&h, &["a"; 4])), vec![0, 4]);
    }
}
