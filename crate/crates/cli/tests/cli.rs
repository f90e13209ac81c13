use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hiersage"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hiersage-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Circulant graph: node i joined to i±1, i±2, i±3.
fn circulant(dir: &Path, n: usize) -> PathBuf {
    let mut text = String::new();
    for i in 0..n {
        for k in 1..=3 {
            text += &format!("n{i}\tn{}\n", (i + k) % n);
        }
    }
    let path = dir.join("edges.tsv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn split_is_byte_identical_across_runs() {
    let dir = scratch("split");
    let edges = circulant(&dir, 60);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        ok(&["split", "--edges", s(&edges), "--frac", "0.7,0.2,0.1", "--seed", "1", "--out", s(out)]);
    }
    for f in ["split.tsv", "split_report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let split = fs::read_to_string(a.join("split.tsv")).unwrap();
    assert_eq!(split.lines().filter(|l| l.ends_with("\ttest")).count(), 6);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn degree_of_triangle() {
    let dir = scratch("triangle");
    let edges = dir.join("tri.tsv");
    fs::write(&edges, "a\tb\nb\tc\nc\ta\n").unwrap();
    let out = dir.join("f");
    ok(&["features", "--edges", s(&edges), "--only", "degree", "--out", s(&out)]);
    let text = fs::read_to_string(out.join("features.tsv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["degree", "2", "2", "2"]);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_format_for_tables() {
    let dir = scratch("json");
    let edges = dir.join("tri.tsv");
    fs::write(&edges, "a\tb\nb\tc\n").unwrap();
    let out = dir.join("f");
    ok(&["features", "--edges", s(&edges), "--only", "degree", "--format", "json", "--out", s(&out)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("features.json")).unwrap()).unwrap();
    assert_eq!(v["columns"], serde_json::json!(["degree"]));
    assert_eq!(v["rows"], serde_json::json!([[1.0], [2.0], [1.0]]));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn manifest_records_the_run() {
    let dir = scratch("manifest");
    let edges = circulant(&dir, 30);
    let out = dir.join("o");
    ok(&["split", "--edges", s(&edges), "--seed", "4", "--out", s(&out)]);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "split");
    assert_eq!(m["seed"], 4);
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.bytes().all(|b| b.is_ascii_hexdigit()));
    assert_eq!(m["outputs"], serde_json::json!(["split.tsv", "split_report.json"]));
    assert!(m["versions"]["hiersage"].is_string());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = scratch("rerun");
    let edges = circulant(&dir, 30);
    let (a, b) = (dir.join("a"), dir.join("b"));
    ok(&["features", "--edges", s(&edges), "--seed", "9", "--out", s(&a)]);
    ok(&["rerun", s(&a.join("manifest.json")), "--out", s(&b)]);
    assert_eq!(fs::read(a.join("features.tsv")).unwrap(), fs::read(b.join("features.tsv")).unwrap());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_input_writes_nothing() {
    let dir = scratch("invalid");
    let edges = circulant(&dir, 30);
    let out = dir.join("o");
    let r = run(&["split", "--edges", s(&edges), "--frac", "0.5,0.2,0.1", "--out", s(&out)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("sum to 1"));
    assert!(!out.exists());

    let bad = dir.join("bad.tsv");
    fs::write(&bad, "a\tb\nb\n").unwrap();
    let r = run(&["features", "--edges", s(&bad), "--out", s(&out)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 2"));
    assert!(!out.exists());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failed_write_removes_partial_outputs() {
    let dir = scratch("partial");
    let edges = circulant(&dir, 30);
    let out = dir.join("o");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("keep.txt"), "mine").unwrap();
    // A directory where the manifest should go makes the final write fail.
    fs::create_dir_all(out.join("manifest.json")).unwrap();
    let r = run(&["split", "--edges", s(&edges), "--out", s(&out)]);
    assert!(!r.status.success());
    let mut left: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    left.sort();
    assert_eq!(left, ["keep.txt", "manifest.json"]);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn hierarchy_validation() {
    let dir = scratch("hier");
    let good = dir.join("good.tsv");
    fs::write(&good, "root\t-\nA\troot\nb\troot\na1\tA\n").unwrap();
    let out = dir.join("o");
    let r = run(&["hierarchy", s(&good), "--out", s(&out)]);
    assert!(r.status.success());
    assert!(String::from_utf8_lossy(&r.stdout).contains("4 classes, 2 leaves"));

    let cyclic = dir.join("cyclic.tsv");
    fs::write(&cyclic, "root\t-\nA\tB\nB\tA\n").unwrap();
    let r = run(&["hierarchy", s(&cyclic), "--out", s(&dir.join("o2"))]);
    assert!(!r.status.success());
    assert!(!dir.join("o2").exists());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn synth_train_eval_pipeline() {
    let dir = scratch("pipeline");
    let data = dir.join("data");
    ok(&["synth", "--nodes", "600", "--p-same", "0.05", "--p-sibling", "0.02", "--seed", "2", "--largest-component", "--out", s(&data)]);
    let split = dir.join("split");
    ok(&["split", "--data", s(&data), "--seed", "2", "--out", s(&split)]);
    let feat = dir.join("feat");
    ok(&["features", "--data", s(&data), "--split", s(&split.join("split.tsv")), "--only", "degree,louvain", "--standardize", "--out", s(&feat)]);
    let (features, split) = (feat.join("features.tsv"), split.join("split.tsv"));
    let common = ["--data", s(&data), "--features", s(&features), "--split", s(&split)];
    let model = dir.join("model");
    let mut args = vec!["train", "--aggregator", "wmean2", "--epochs", "2", "--hidden", "8,8", "--out", s(&model)];
    args.extend(common);
    ok(&args);
    let ev = dir.join("eval");
    let ckpt = model.join("checkpoint.json");
    let mut args = vec!["eval", "--checkpoint", s(&ckpt), "--role", "val", "--out", s(&ev)];
    args.extend(common);
    ok(&args);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(ev.join("metrics.json")).unwrap()).unwrap();
    let f1 = m["micro_f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
    fs::remove_dir_all(&dir).unwrap();
}
