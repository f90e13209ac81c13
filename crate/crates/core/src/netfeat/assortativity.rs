use crate::graph::Graph;

/// Mean degree balance of each node with its neighbours.
///
/// `a(u) = (1/d(u)) Σ_{v ∈ N(u)} min(d(u), d(v)) / max(d(u), d(v))`, and 0 for
/// isolated nodes. Values lie in `[0, 1]` and equal 1 on regular graphs.
pub fn assortativity(g: &Graph) -> Vec<f64> {
    let deg = g.degrees();
    (0..g.node_count())
        .map(|u| {
            let du = deg[u];
            if du == 0 {
                return 0.0;
            }
            let sum: f64 = g
                .neighbors(u)
                .iter()
                .map(|&v| {
                    let dv = deg[v];
                    du.min(dv) as f64 / du.max(dv) as f64
                })
                .sum();
            sum / du as f64
        })
        .collect()
}
