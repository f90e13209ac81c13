//! Browser bindings: generate a labelled graph and inspect its label mixing,
//! explore hierarchy-aware neighbour weights, and run a small aggregator
//! comparison. Every export takes and returns JSON strings.

use hiersage::analysis::neighbourhood_label_matrix;
use hiersage::bench::{run_bench, BenchConfig, FeatureSet};
use hiersage::hierarchy::{LcaDistance, WeightKind};
use hiersage::sage::TrainConfig;
use hiersage::synth::{empirical_homophily, generate, SynthConfig};
use hiersage::LabelHierarchy;
use serde::Deserialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Label mixing of a generated graph. `config` is a partial generator config.
pub fn synth_summary(config: &str) -> Result<String, String> {
    let cfg: SynthConfig = serde_json::from_str(config).map_err(fail)?;
    cfg.validate().map_err(fail)?;
    let s = generate(&cfg).map_err(fail)?;
    let m = neighbourhood_label_matrix(&s.graph, &s.labels, &s.hierarchy);
    let (leaf, group) = empirical_homophily(&s.graph, &s.labels, &s.hierarchy);
    let rows: Vec<Vec<f64>> = m.values.rows().into_iter().map(|r| r.to_vec()).collect();
    Ok(json!({
        "nodes": s.graph.node_count(),
        "edges": s.graph.edge_count(),
        "components": s.graph.components().1,
        "leaf_homophily": leaf,
        "group_homophily": group,
        "classes": m.names,
        "support": m.support,
        "matrix": rows,
    })
    .to_string())
}

/// Weight of every leaf as a neighbour of `center`, under both weighting schemes.
/// `hierarchy` uses the `child<TAB>parent` format, with `-` as the root's parent.
pub fn weight_table(hierarchy: &str, center: &str, lca: &str) -> Result<String, String> {
    let h = LabelHierarchy::read(hierarchy.as_bytes()).map_err(fail)?;
    let measure = match lca {
        "center" => LcaDistance::Center,
        "neighbour" => LcaDistance::Neighbour,
        "max" => LcaDistance::Max,
        other => return Err(format!("unknown distance measure `{other}`")),
    };
    let c = h.class_id(center).ok_or_else(|| format!("unknown class `{center}`"))?;
    let mut rows = Vec::new();
    for leaf in h.leaves() {
        rows.push(json!({
            "class": h.name(leaf),
            "lca": h.name(h.lca(c, leaf).map_err(fail)?),
            "wmean1": h.wmean1_weight(c, leaf).map_err(fail)?,
            "wmean2": h.wmean2_weight_with(c, leaf, measure).map_err(fail)?,
        }));
    }
    let leaves: Vec<&str> = h.leaves().into_iter().map(|l| h.name(l)).collect();
    Ok(json!({ "center": center, "leaves": leaves, "rows": rows }).to_string())
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct QuickBench {
    nodes: usize,
    epochs: usize,
    hidden: usize,
    seed: u64,
    attribute_accuracy: f64,
}

impl Default for QuickBench {
    fn default() -> Self {
        QuickBench {
            nodes: 600,
            epochs: 5,
            hidden: 16,
            seed: 0,
            attribute_accuracy: 0.8,
        }
    }
}

/// MEAN against WMEAN-1 and WMEAN-2 on one small generated graph, with cheap
/// features only so it finishes in a few seconds on one thread.
pub fn compare_aggregators(options: &str) -> Result<String, String> {
    let q: QuickBench = serde_json::from_str(options).map_err(fail)?;
    if q.nodes > 5000 || q.epochs > 50 || q.hidden == 0 || q.hidden > 128 {
        return Err("keep nodes ≤ 5000, epochs ≤ 50 and hidden in 1..=128".into());
    }
    let mut cfg = BenchConfig {
        seeds: vec![q.seed],
        hidden: vec![q.hidden, q.hidden],
        train: TrainConfig {
            epochs: q.epochs,
            ..TrainConfig::default()
        },
        features: FeatureSet {
            betweenness: false,
            embedding: None,
            attribute_accuracy: Some(q.attribute_accuracy),
            ..FeatureSet::default()
        },
        aggregators: vec![WeightKind::Uniform, WeightKind::Wmean1, WeightKind::Wmean2],
        ..BenchConfig::default()
    };
    cfg.synth.nodes = q.nodes;
    // Denser than the default so small graphs still split cleanly.
    let scale = (1200.0 / q.nodes.max(1) as f64).max(1.0);
    cfg.synth.p_same = (cfg.synth.p_same * scale).min(1.0);
    cfg.synth.p_sibling = (cfg.synth.p_sibling * scale).min(1.0);
    cfg.synth.p_far = (cfg.synth.p_far * scale).min(1.0);
    cfg.synth.p_star = (cfg.synth.p_star * scale).min(1.0);
    let report = run_bench(&cfg).map_err(fail)?;
    serde_json::to_string(&report).map_err(fail)
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = synthSummary)]
pub fn synth_summary_js(config: &str) -> Result<String, JsValue> {
    js(synth_summary(config))
}

#[wasm_bindgen(js_name = weightTable)]
pub fn weight_table_js(hierarchy: &str, center: &str, lca: &str) -> Result<String, JsValue> {
    js(weight_table(hierarchy, center, lca))
}

#[wasm_bindgen(js_name = compareAggregators)]
pub fn compare_aggregators_js(options: &str) -> Result<String, JsValue> {
    js(compare_aggregators(options))
}
