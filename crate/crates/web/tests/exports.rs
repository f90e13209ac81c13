use hiersage_web::{compare_aggregators, synth_summary, weight_table};
use serde_json::Value;

const TREE: &str = "root\t-\nA\troot\nB\troot\na1\tA\na2\tA\nb1\tB\n";

#[test]
fn summary_rows_are_distributions() {
    let v: Value = serde_json::from_str(&synth_summary(r#"{"nodes": 300, "seed": 5}"#).unwrap()).unwrap();
    assert_eq!(v["nodes"], 300);
    for (row, support) in v["matrix"].as_array().unwrap().iter().zip(v["support"].as_array().unwrap()) {
        let sum: f64 = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        if support.as_u64().unwrap() > 0 {
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn weights_follow_the_tree() {
    let v: Value = serde_json::from_str(&weight_table(TREE, "a1", "center").unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let get = |c: &str, k: &str| rows.iter().find(|r| r["class"] == c).unwrap()[k].as_f64().unwrap();
    assert_eq!(get("a1", "wmean1"), 1.0);
    assert_eq!(get("a2", "wmean1"), 0.75);
    assert_eq!(get("b1", "wmean1"), 0.25);
    assert_eq!(get("a1", "wmean2"), 1.0);
    assert_eq!(get("a2", "wmean2"), 0.5);
    assert!((get("b1", "wmean2") - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(weight_table(TREE, "zz", "center").is_err());
    assert!(weight_table(TREE, "A", "center").is_err());
    assert!(weight_table(TREE, "a1", "sideways").is_err());
    assert!(synth_summary("{not json").is_err());
    assert!(compare_aggregators(r#"{"nodes": 100000}"#).is_err());
}

#[test]
fn quick_comparison_reports_three_rows() {
    let v: Value = serde_json::from_str(&compare_aggregators(r#"{"nodes": 400, "epochs": 2}"#).unwrap()).unwrap();
    let names: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["aggregator"].as_str().unwrap()).collect();
    assert_eq!(names, ["MEAN", "WMEAN-1", "WMEAN-2"]);
}
