#![allow(dead_code)]

use hiersage::graph::Graph;
use hiersage::hierarchy::{ClassId, LabelHierarchy, WeightKind};
use hiersage::rng;
use hiersage::sage::{sample_neighbourhood, ModelSpec, NeighbourhoodSample, SageModel, SampleFanout, WeightContext};
use ndarray::Array2;
use rand::Rng;

pub fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_edges(n, edges.iter().copied()).unwrap()
}

pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng::stream(seed, "test-graph");
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                e.push((u, v));
            }
        }
    }
    Graph::from_edges(n, e).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::stream(seed, "test-matrix");
    Array2::from_shape_simple_fn((rows, cols), || r.gen_range(-1.0..1.0))
}

/// root → {A → {a1, a2}, b}
pub fn three_leaves() -> LabelHierarchy {
    LabelHierarchy::from_pairs(&[("root", None), ("A", Some("root")), ("a1", Some("A")), ("a2", Some("A")), ("b", Some("root"))])
        .unwrap()
}

pub struct GradCheck {
    pub worst: f64,
    pub per_tensor: Vec<f64>,
}

/// Largest relative gap between analytic and central-difference gradients,
/// per parameter tensor.
pub fn gradient_check(kind: WeightKind, seed: u64) -> GradCheck {
    let h = three_leaves();
    let g = random_graph(12, 0.3, seed);
    let features = random_matrix(12, 3, seed);
    let mut r = rng::stream(seed, "test-labels");
    let leaves = h.leaves();
    let labels: Vec<Option<ClassId>> = (0..12)
        .map(|_| if r.gen_bool(0.8) { Some(leaves[r.gen_range(0..leaves.len())]) } else { None })
        .collect();
    let ctx = WeightContext { hierarchy: &h, labels: &labels };
    let mut model = SageModel::new(ModelSpec::new(3, vec![5, 4], 3, kind), seed).unwrap();
    for (i, p) in model.params.iter_mut().enumerate() {
        if i % 2 == 1 {
            *p = random_matrix(p.nrows(), p.ncols(), seed + i as u64) * 0.1;
        }
    }
    let mut sr = rng::stream(seed, rng::SAMPLING);
    let sample = sample_neighbourhood(&g, &[0, 1, 2], &SampleFanout(vec![2, 3]), &mut sr).unwrap();
    let targets = [0, 2, 1];
    let (_, grads) = model.loss_and_gradient(&sample, &features, &ctx, &targets).unwrap();
    let eps = 1e-6;
    let mut per_tensor = Vec::new();
    for t in 0..model.params.len() {
        let mut worst: f64 = 0.0;
        for idx in 0..model.params[t].len() {
            let (i, j) = (idx / model.params[t].ncols(), idx % model.params[t].ncols());
            let orig = model.params[t][[i, j]];
            model.params[t][[i, j]] = orig + eps;
            let plus = loss(&model, &sample, &features, &ctx, &targets);
            model.params[t][[i, j]] = orig - eps;
            let minus = loss(&model, &sample, &features, &ctx, &targets);
            model.params[t][[i, j]] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let analytic = grads[t][[i, j]];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        per_tensor.push(worst);
    }
    GradCheck {
        worst: per_tensor.iter().copied().fold(0.0, f64::max),
        per_tensor,
    }
}

fn loss(model: &SageModel, sample: &NeighbourhoodSample, features: &Array2<f64>, ctx: &WeightContext<'_>, targets: &[usize]) -> f64 {
    model.loss_and_gradient(sample, features, ctx, targets).unwrap().0
}
