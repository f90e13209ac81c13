mod common;

use common::{gradient_check, graph, random_graph, random_matrix, three_leaves};
use hiersage::hierarchy::{LabelHierarchy, WeightKind};
use hiersage::rng;
use hiersage::sage::{
    aggregate, aggregate_with_center_weight, evaluate, grid_search, sample_neighbourhood, softmax, train, ClassIndex,
    Experiment, GraphData, GridEntry, Metrics, ModelSpec, NeighbourhoodSample, SageModel, SampleFanout, TrainConfig,
    WeightContext,
};
use hiersage::split::{build_split_graphs, make_split, Role, SplitConfig};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn aggregate_examples() {
    let c = array![0.0, 0.0];
    let (h1, h2) = (array![2.0, 0.0], array![0.0, 8.0]);
    let z = aggregate(c.view(), &[h1.view(), h2.view()], &[1.0, 0.25]).unwrap();
    assert!((z[0] - 2.0 / 2.25).abs() < 1e-15 && (z[1] - 2.0 / 2.25).abs() < 1e-15);
    let mean = aggregate(c.view(), &[h1.view(), h2.view()], &[1.0, 1.0]).unwrap();
    assert_eq!(mean, array![2.0 / 3.0, 8.0 / 3.0]);
    assert_eq!(aggregate(h1.view(), &[], &[]).unwrap(), h1);
    assert!(aggregate(c.view(), &[h1.view()], &[]).is_err());
    assert!(aggregate(c.view(), &[array![1.0].view()], &[1.0]).is_err());
}

proptest! {
    #[test]
    fn common_scaling_of_all_weights_is_neutral(ws in prop::collection::vec(0.01f64..1.0, 1..6), c in 0.01f64..50.0) {
        let nbrs: Vec<_> = (0..ws.len()).map(|i| array![i as f64, 1.0 - i as f64, 0.5]).collect();
        let views: Vec<_> = nbrs.iter().map(|a| a.view()).collect();
        let center = array![3.0, -1.0, 2.0];
        let a = aggregate(center.view(), &views, &ws).unwrap();
        let scaled: Vec<f64> = ws.iter().map(|w| w * c).collect();
        let b = aggregate_with_center_weight(center.view(), c, &views, &scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one(seed in 0u64..500, scale in 0.1f64..200.0) {
        let p = softmax(&(random_matrix(7, 5, seed) * scale));
        for row in p.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn micro_f1_equals_accuracy(seed in 0u64..1000) {
        let mut r = rng::stream(seed, "f1");
        let n = r.gen_range(1..60);
        let pred: Vec<usize> = (0..n).map(|_| r.gen_range(0..4)).collect();
        let truth: Vec<usize> = (0..n).map(|_| r.gen_range(0..4)).collect();
        let names: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let m = Metrics::from_predictions(&pred, &truth, &names).unwrap();
        let correct = pred.iter().zip(&truth).filter(|(a, b)| a == b).count();
        prop_assert_eq!(m.micro_f1, correct as f64 / n as f64);
    }
}

#[test]
fn single_layer_identity_reduces_to_head() {
    let h = LabelHierarchy::from_pairs(&[("r", None), ("x", Some("r")), ("y", Some("r"))]).unwrap();
    let g = graph(1, &[]);
    let features = array![[0.6, 0.8]];
    let mut model = SageModel::new(ModelSpec::new(2, vec![2], 2, WeightKind::Uniform), 0).unwrap();
    model.params[0] = Array2::eye(2);
    let sample = NeighbourhoodSample {
        levels: vec![vec![0], vec![]],
        fanout: vec![0],
    };
    let labels = vec![None];
    let ctx = WeightContext { hierarchy: &h, labels: &labels };
    let logits = model.forward(&sample, &features, &ctx).unwrap();
    let (wh, bh) = model.head();
    let expected = features.dot(&wh.t()) + bh;
    assert!((&logits - &expected).iter().all(|d| d.abs() < 1e-12));
    let _ = g;
}

fn forward_with(kind: WeightKind, h: &LabelHierarchy, labels: &[Option<usize>], sample: &NeighbourhoodSample, x: &Array2<f64>) -> Array2<f64> {
    let model = SageModel::new(ModelSpec::new(x.ncols(), vec![6, 4], 3, kind), 9).unwrap();
    model.forward(sample, x, &WeightContext { hierarchy: h, labels }).unwrap()
}

#[test]
fn neighbour_order_does_not_matter() {
    let h = three_leaves();
    let g = random_graph(15, 0.3, 4);
    let x = random_matrix(15, 4, 4);
    let leaves = h.leaves();
    let labels: Vec<_> = (0..15).map(|u| Some(leaves[u % 3])).collect();
    let mut r = rng::stream(4, rng::SAMPLING);
    let sample = sample_neighbourhood(&g, &[0, 5], &SampleFanout(vec![3, 2]), &mut r).unwrap();
    // reverse each child block of the last level and their parents' order within blocks of level 1
    let mut permuted = sample.clone();
    let f1 = sample.fanout[1];
    let f0 = sample.fanout[0];
    for p in 0..sample.levels[0].len() {
        let block: Vec<usize> = (p * f0..(p + 1) * f0).collect();
        for (dst, &src) in block.iter().zip(block.iter().rev()) {
            permuted.levels[1][*dst] = sample.levels[1][src];
            for j in 0..f1 {
                permuted.levels[2][dst * f1 + j] = sample.levels[2][src * f1 + (f1 - 1 - j)];
            }
        }
    }
    for kind in [WeightKind::Uniform, WeightKind::Wmean1, WeightKind::Wmean2] {
        let a = forward_with(kind, &h, &labels, &sample, &x);
        let b = forward_with(kind, &h, &labels, &permuted, &x);
        assert!((&a - &b).iter().all(|d| d.abs() < 1e-12), "{kind:?}");
    }
}

#[test]
fn one_leaf_hierarchy_reduces_weighted_means_to_mean() {
    let h = LabelHierarchy::from_pairs(&[("root", None), ("only", Some("root"))]).unwrap();
    let g = random_graph(20, 0.25, 8);
    let x = random_matrix(20, 4, 8);
    let labels = vec![h.class_id("only"); 20];
    let mut r = rng::stream(8, rng::SAMPLING);
    let sample = sample_neighbourhood(&g, &[0, 1, 2, 3], &SampleFanout::default(), &mut r).unwrap();
    let mean = forward_with(WeightKind::Uniform, &h, &labels, &sample, &x);
    for kind in [WeightKind::Wmean1, WeightKind::Wmean2] {
        let w = forward_with(kind, &h, &labels, &sample, &x);
        assert!((&w - &mean).iter().all(|d| d.abs() < 1e-12));
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for kind in [WeightKind::Uniform, WeightKind::Wmean1, WeightKind::Wmean2] {
        for seed in [1, 2] {
            let check = gradient_check(kind, seed);
            assert!(check.worst < 1e-4, "{kind:?} seed {seed}: {:?}", check.per_tensor);
        }
    }
}

/// Two dense clusters whose class is encoded in a one-hot feature.
fn separable_toy() -> (hiersage::graph::Graph, Array2<f64>, LabelHierarchy, Vec<Option<usize>>) {
    let h = LabelHierarchy::from_pairs(&[("r", None), ("left", Some("r")), ("right", Some("r"))]).unwrap();
    let mut edges = Vec::new();
    for base in [0, 10] {
        for u in 0..10 {
            for v in u + 1..10 {
                if (u + v) % 3 != 0 {
                    edges.push((base + u, base + v));
                }
            }
        }
    }
    edges.push((0, 10));
    let g = graph(20, &edges);
    let x = Array2::from_shape_fn((20, 2), |(u, j)| f64::from(u8::from((u >= 10) == (j == 1))));
    let labels = (0..20).map(|u| h.class_id(if u < 10 { "left" } else { "right" })).collect();
    (g, x, h, labels)
}

#[test]
fn separable_toy_is_learned() {
    let (g, x, h, labels) = separable_toy();
    let classes = ClassIndex::new(&h);
    let data = GraphData { graph: &g, features: &x, labels: &labels, hierarchy: &h, classes: &classes };
    let nodes: Vec<usize> = (0..20).collect();
    let cfg = TrainConfig { epochs: 50, fanout: SampleFanout(vec![5]), seed: 1, ..TrainConfig::default() };
    let mut model = SageModel::new(ModelSpec::new(2, vec![8], 2, WeightKind::Uniform), 1).unwrap();
    let report = train(&mut model, &data, &nodes, &cfg).unwrap();
    assert_eq!(report.loss_history.len(), 50);
    assert!(report.loss_history[49] < report.loss_history[0]);
    let m = evaluate(&model, &data, &nodes, &cfg.fanout, 1).unwrap();
    assert_eq!(m.micro_f1, 1.0);
}

#[test]
fn zero_epochs_and_zero_rate() {
    let (g, x, h, labels) = separable_toy();
    let classes = ClassIndex::new(&h);
    let data = GraphData { graph: &g, features: &x, labels: &labels, hierarchy: &h, classes: &classes };
    let nodes: Vec<usize> = (0..20).collect();
    let spec = ModelSpec::new(2, vec![4], 2, WeightKind::Wmean1);
    let fresh = SageModel::new(spec.clone(), 3).unwrap();

    let mut model = fresh.clone();
    let cfg = TrainConfig { epochs: 0, fanout: SampleFanout(vec![3]), ..TrainConfig::default() };
    assert!(train(&mut model, &data, &nodes, &cfg).unwrap().loss_history.is_empty());
    assert_eq!(model, fresh);

    let cfg = TrainConfig { epochs: 5, lr: 0.0, fanout: SampleFanout(vec![3]), ..TrainConfig::default() };
    let report = train(&mut model, &data, &nodes, &cfg).unwrap();
    assert!(report.loss_history.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(model, fresh);
}

#[test]
fn training_is_deterministic_and_validates() {
    let (g, x, h, labels) = separable_toy();
    let classes = ClassIndex::new(&h);
    let data = GraphData { graph: &g, features: &x, labels: &labels, hierarchy: &h, classes: &classes };
    let nodes: Vec<usize> = (0..20).collect();
    let cfg = TrainConfig { epochs: 3, fanout: SampleFanout(vec![3, 2]), batch_size: 7, ..TrainConfig::default() };
    let spec = ModelSpec::new(2, vec![4, 3], 2, WeightKind::Wmean2);
    let mut a = SageModel::new(spec.clone(), 5).unwrap();
    let mut b = SageModel::new(spec.clone(), 5).unwrap();
    assert_eq!(train(&mut a, &data, &nodes, &cfg).unwrap(), train(&mut b, &data, &nodes, &cfg).unwrap());
    assert_eq!(a, b);
    let mut c = SageModel::new(spec, 5).unwrap();
    let bad = TrainConfig { fanout: SampleFanout(vec![3]), ..cfg.clone() };
    assert!(train(&mut c, &data, &nodes, &bad).is_err());
    let bad = TrainConfig { lr: f64::NAN, ..cfg };
    assert!(train(&mut c, &data, &nodes, &bad).is_err());
}

#[test]
fn non_finite_input_aborts_with_diagnostics() {
    let (g, mut x, h, labels) = separable_toy();
    x[[3, 0]] = f64::NAN;
    let classes = ClassIndex::new(&h);
    let data = GraphData { graph: &g, features: &x, labels: &labels, hierarchy: &h, classes: &classes };
    let mut model = SageModel::new(ModelSpec::new(2, vec![4], 2, WeightKind::Uniform), 0).unwrap();
    let cfg = TrainConfig { epochs: 2, fanout: SampleFanout(vec![2]), ..TrainConfig::default() };
    match train(&mut model, &data, &(0..20).collect::<Vec<_>>(), &cfg) {
        Err(hiersage::Error::NonFiniteLoss { epoch, grad_norms, .. }) => {
            assert_eq!(epoch, 0);
            assert_eq!(grad_norms.len(), 4);
        }
        other => panic!("expected a non-finite loss, got {other:?}"),
    }
}

#[test]
fn grid_search_ranks_and_breaks_ties() {
    let s = hiersage::synth::generate(&hiersage::synth::SynthConfig { nodes: 200, p_same: 0.08, p_sibling: 0.03, p_far: 0.01, ..Default::default() }).unwrap();
    let d = hiersage::dataset::Dataset::from_synth(s).unwrap().largest_component().unwrap().0;
    let split = make_split(&d.graph, &SplitConfig::default()).unwrap();
    let graphs = build_split_graphs(&d.graph, &split).unwrap();
    let x = hiersage::synth::group_attributes(&d.labels, &d.hierarchy, 0.8, 0).unwrap();
    let exp = Experiment { graphs: &graphs, split: &split, features: x.values(), labels: &d.labels, hierarchy: &d.hierarchy };
    let train_cfg = TrainConfig { epochs: 2, fanout: SampleFanout(vec![3, 2]), ..TrainConfig::default() };
    let entry = GridEntry::new(WeightKind::Wmean1, vec![4, 4], train_cfg.clone());

    let one = grid_search(&exp, std::slice::from_ref(&entry)).unwrap();
    assert_eq!(one.best, entry);
    assert_eq!(one.leaderboard.len(), 1);

    let dup = grid_search(&exp, &[entry.clone(), entry.clone()]).unwrap();
    assert_eq!(dup.leaderboard[0].val_micro_f1, dup.leaderboard[1].val_micro_f1);
    assert_eq!(dup.leaderboard[0].index, 0);

    let grid: Vec<GridEntry> = [WeightKind::Uniform, WeightKind::Wmean1, WeightKind::Wmean2]
        .into_iter()
        .map(|k| GridEntry::new(k, vec![4, 4], train_cfg.clone()))
        .collect();
    let three = grid_search(&exp, &grid).unwrap();
    let mut labels: Vec<_> = three.leaderboard.iter().map(|r| r.label.as_str()).collect();
    labels.sort();
    assert_eq!(labels, ["MEAN", "WMEAN-1", "WMEAN-2"]);
    assert!(three.leaderboard.windows(2).all(|w| w[0].val_micro_f1 >= w[1].val_micro_f1));
    assert!(grid_search(&exp, &[]).is_err());
    let _ = Role::Test;
}
