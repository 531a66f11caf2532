use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctxsteer"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn synth(dir: &Path, sources: &str, docs: &str) -> String {
    let corpus = dir.join("corpus");
    run(&[
        "synth",
        "--out",
        corpus.to_str().unwrap(),
        "--sources",
        sources,
        "--docs",
        docs,
        "--length",
        "1024",
        "--seed",
        "3",
    ]);
    corpus.to_str().unwrap().to_string()
}

fn without_timing(mut report: Value) -> Value {
    report.as_object_mut().unwrap().remove("run");
    report["wall_clock_secs"] = Value::Null;
    report
}

#[test]
fn piped_matrix_matches_single_shot_eval() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "2", "15");
    let d = dir.path();
    run(&["distances", "--corpus", &corpus, "--out", d.join("m").to_str().unwrap()]);
    assert!(d.join("m/matrix.json").exists() && d.join("m/run.json").exists());
    run(&["eval", "--corpus", &corpus, "--out", d.join("a").to_str().unwrap(), "--seed", "4"]);
    run(&[
        "eval",
        "--matrix",
        d.join("m/matrix.csv").to_str().unwrap(),
        "--out",
        d.join("b").to_str().unwrap(),
        "--seed",
        "4",
    ]);
    let a = read_json(&d.join("a/report.json"));
    let b = read_json(&d.join("b/report.json"));
    assert!(a["run"]["inputs"]["corpus_digest"].is_string());
    assert!(b["run"]["inputs"]["matrix_sha256"].is_string());
    assert_eq!(without_timing(a), without_timing(b));
    let csv = std::fs::read_to_string(d.join("a/summary.csv")).unwrap();
    assert!(csv.starts_with("method,codec,measure,classes,feature_count,test_f1_mean,test_sil_mean"));
}

#[test]
fn ours_beats_dummy_on_synthetic_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "2", "20");
    let d = dir.path();
    run(&["distances", "--corpus", &corpus, "--out", d.join("m").to_str().unwrap()]);
    let matrix = d.join("m/matrix.csv");
    let mut f1 = Vec::new();
    for method in ["ours", "dummy"] {
        let out = d.join(method);
        run(&[
            "eval",
            "--matrix",
            matrix.to_str().unwrap(),
            "--method",
            method,
            "--out",
            out.to_str().unwrap(),
        ]);
        f1.push(read_json(&out.join("report.json"))["mean"]["test_f1"].as_f64().unwrap());
    }
    assert!(f1[0] > f1[1], "ours {} vs dummy {}", f1[0], f1[1]);
}

#[test]
fn flags_override_config_file_and_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "2", "6");
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "refs = 3\naggregate = \"min\"\nseed = 11\n").unwrap();
    let model = dir.path().join("model.json");
    run(&[
        "steer",
        "--corpus",
        &corpus,
        "--config",
        cfg.to_str().unwrap(),
        "--refs",
        "2",
        "--out",
        model.to_str().unwrap(),
    ]);
    let m = read_json(&model);
    let steering = &m["run"]["settings"]["method"]["steering"];
    assert_eq!(steering["refs"], 2);
    assert_eq!(steering["aggregate"], "min");
    assert_eq!(m["run"]["settings"]["seed"], 11);
    assert_eq!(m["f_aggregate"], "min");
    assert_eq!(m["measure"], "ncd");
    for cluster in m["clusters"].as_array().unwrap() {
        let members = cluster["members"].as_array().unwrap().len();
        assert_eq!(cluster["references"].as_array().unwrap().len(), members.min(2));
    }
}

#[test]
fn sweep_writes_one_report_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "2", "10");
    let cfg = dir.path().join("grid.toml");
    std::fs::write(&cfg, "[grid]\nmethods = [\"ours\", \"knn\"]\nrefs = [1, 2]\n").unwrap();
    let out = dir.path().join("sweep");
    run(&[
        "sweep",
        "--corpus",
        &corpus,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest = read_json(&out.join("manifest.json"));
    let points = manifest["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    for p in points {
        assert!(out.join(p["file"].as_str().unwrap()).exists());
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
}

#[test]
fn tree_writes_newick_per_class() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "2", "5");
    let out = dir.path().join("trees");
    run(&["tree", "--corpus", &corpus, "--out", out.to_str().unwrap()]);
    for class in ["source0", "source1"] {
        let nwk = std::fs::read_to_string(out.join(format!("{class}.nwk"))).unwrap();
        assert!(nwk.trim_end().ends_with(';'));
        assert_eq!(nwk.matches("doc").count(), 5);
    }
    assert!(read_json(&out.join("selection.json"))["selection"]["classes"].is_object());
}

#[test]
fn unknown_flag_exits_with_usage() {
    let out = bin().args(["eval", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn failures_emit_an_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["eval", "--corpus", dir.path().join("missing").to_str().unwrap(), "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let record: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "IoError");

    let out = bin()
        .args(["eval", "--measure", "ncd", "--standardize", "pipeline", "--corpus"])
        .arg(synth(dir.path(), "2", "5"))
        .args(["--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let record: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "MeasureMismatch");
}
