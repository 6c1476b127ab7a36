use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use regkmeans::model::io::{read_labels_csv, read_points_csv};
use regkmeans::rounding::match_labels;
use regkmeans::synth::{generate, BallModelConfig, NoiseConfig};
use serde_json::Value;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regkmeans")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const BALL: &str = r#"{"k": 2, "d": 4, "n": 6, "delta": 5.0, "seed": 11}"#;
const NOISE: &str = r#"{"m_far": 2, "seed": 12}"#;

/// Generates the small two-ball instance with far noise into `dir/inst`.
fn gen_instance(dir: &Path) -> PathBuf {
    let ball = write(dir, "ball.json", BALL);
    let noise = write(dir, "noise.json", NOISE);
    let out = dir.join("inst");
    let o = bin(&["gen", "--ball", p(&ball), "--noise", p(&noise), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_bundle_round_trips() {
    let dir = TempDir::new().unwrap();
    let inst_dir = gen_instance(dir.path());
    let ball: BallModelConfig = serde_json::from_str(BALL).unwrap();
    let noise: NoiseConfig = serde_json::from_str(NOISE).unwrap();
    let inst = generate(&ball, &noise).unwrap();
    assert_eq!(read_points_csv(inst_dir.join("points.csv"), false).unwrap(), inst.points);
    let labels = read_labels_csv(inst_dir.join("labels.csv"), Some(2)).unwrap();
    assert_eq!(labels, inst.truth.planted_clustering(&inst.points).unwrap());
    let bundle = json(&inst_dir.join("bundle.json"));
    assert_eq!(bundle["audit_passed"], Value::Bool(true));
    assert_eq!(bundle["truth"]["far_noise"], serde_json::json!([12, 13]));
}

#[test]
fn gen_minimal_single_ball_with_overrides() {
    let dir = TempDir::new().unwrap();
    let ball = write(dir.path(), "ball.json", BALL);
    let out = dir.path().join("one");
    let o = bin(&["gen", "--ball", p(&ball), "--k", "1", "--n", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_points_csv(out.join("points.csv"), false).unwrap().n_points(), 3);
    assert_eq!(json(&out.join("bundle.json"))["ball"]["k"], 1);
}

#[test]
fn gen_rejects_malformed_config() {
    let dir = TempDir::new().unwrap();
    let ball = write(dir.path(), "ball.json", "{\"k\": 2,");
    let o = bin(&["gen", "--ball", p(&ball), "--out", p(&dir.path().join("x"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn solve_round_certify_pipeline() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path());
    let points = inst.join("points.csv");
    let sol = dir.path().join("sol");
    // Lower end of the recovery window for delta = 5.
    let o = bin(&["solve", "--points", p(&points), "--k", "2", "--lambda", "17", "--out", p(&sol)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&sol.join("solution.json"))["converged"], Value::Bool(true));
    let labels = dir.path().join("rounded.csv");
    let o = bin(&["round", "--points", p(&points), "--solution", p(&sol), "--out", p(&labels)]);
    assert_eq!(code(&o), 0);
    let rounded = read_labels_csv(&labels, Some(2)).unwrap();
    let planted = read_labels_csv(inst.join("labels.csv"), Some(2)).unwrap();
    assert_eq!(match_labels(&rounded, &planted).unwrap(), planted);
    let report = dir.path().join("cert.json");
    let o = bin(&[
        "certify",
        "--points",
        p(&points),
        "--labels",
        p(&labels),
        "--lambda",
        "17",
        "--delta",
        "5",
        "--out",
        p(&report),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&report)["verdict_text"], "CERTIFIED");
}

#[test]
fn binary_payload_matches_csv_payload() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path());
    let points = inst.join("points.csv");
    let mut outs = Vec::new();
    for format in ["csv", "bin"] {
        let sol = dir.path().join(format);
        let o = bin(&[
            "solve",
            "--points",
            p(&points),
            "--k",
            "2",
            "--lambda",
            "17",
            "--format",
            format,
            "--out",
            p(&sol),
        ]);
        assert_eq!(code(&o), 0);
        let labels = dir.path().join(format!("{format}.csv"));
        assert_eq!(
            code(&bin(&["round", "--points", p(&points), "--solution", p(&sol), "--out", p(&labels)])),
            0
        );
        outs.push(fs::read(labels).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert!(dir.path().join("bin/z.bin").exists() && dir.path().join("bin/y.bin").exists());
}

#[test]
fn solve_lambda_is_required_and_inf_is_accepted() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path());
    let points = inst.join("points.csv");
    let sol = dir.path().join("sol");
    assert_eq!(code(&bin(&["solve", "--points", p(&points), "--k", "2", "--out", p(&sol)])), 1);
    let o = bin(&["solve", "--points", p(&points), "--k", "2", "--lambda", "inf", "--out", p(&sol)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&sol.join("solution.json"))["lambda"], Value::Null);
    assert!(!sol.join("y.csv").exists());
}

#[test]
fn non_convergence_exits_two() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path());
    let sol = dir.path().join("sol");
    let o = bin(&[
        "solve",
        "--points",
        p(&inst.join("points.csv")),
        "--k",
        "2",
        "--lambda",
        "17",
        "--max-iter",
        "3",
        "--out",
        p(&sol),
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(json(&sol.join("solution.json"))["converged"], Value::Bool(false));
}

#[test]
fn certificate_failure_exits_three() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path());
    let text = fs::read_to_string(inst.join("labels.csv")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    // Move one point of the first ball into the second cluster.
    lines[0] = "2";
    let wrong = write(dir.path(), "wrong.csv", &(lines.join("\n") + "\n"));
    let o =
        bin(&["certify", "--points", p(&inst.join("points.csv")), "--labels", p(&wrong), "--lambda", "17"]);
    assert_eq!(code(&o), 3);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["verdict_text"].as_str().unwrap().starts_with("FAILED"));
}

#[test]
fn lp_certify_and_baseline() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path());
    let points = inst.join("points.csv");
    let o = bin(&[
        "certify",
        "--kind",
        "lp",
        "--points",
        p(&points),
        "--labels",
        p(&inst.join("labels.csv")),
        "--lambda",
        "17",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let out = dir.path().join("km.csv");
    let o = bin(&["baseline", "--points", p(&points), "--k", "2", "--seed", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    assert!(!read_labels_csv(&out, None).unwrap().has_noise());
}

/// Pair-enumeration f1 computed independently of the library.
fn oracle_f1(a: &[usize], b: &[usize]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
    }
    let (pr, rc) = (tp / (tp + fp), tp / (tp + fn_));
    2.0 * pr * rc / (pr + rc)
}

#[test]
fn eval_metrics() {
    let dir = TempDir::new().unwrap();
    let a = [0, 0, 1, 1, 2, 2, 2];
    let b = [1, 0, 1, 1, 2, 0, 2];
    let lines = |v: &[usize]| v.iter().map(|x| format!("{}\n", x + 1)).collect::<String>();
    let fa = write(dir.path(), "a.csv", &lines(&a));
    let fb = write(dir.path(), "b.csv", &lines(&b));
    let o = bin(&["eval", "--candidate", p(&fa), "--reference", p(&fa)]);
    assert_eq!(code(&o), 0);
    let same: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(same["f1"], 1.0);
    assert_eq!(same["delta"], 0.0);
    let o = bin(&["eval", "--candidate", p(&fa), "--reference", p(&fb)]);
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((m["f1"].as_f64().unwrap() - oracle_f1(&a, &b)).abs() < 1e-15);
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&bin(&["eval", "--candidate", p(&missing), "--reference", p(&fa)])), 1);
}

#[test]
fn eval_reassigns_noise_and_drops_reference_noise() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path());
    let labels = inst.join("labels.csv");
    let o = bin(&["eval", "--candidate", p(&labels), "--reference", p(&labels)]);
    assert_eq!(code(&o), 1);
    let o = bin(&[
        "eval",
        "--candidate",
        p(&labels),
        "--reference",
        p(&labels),
        "--points",
        p(&inst.join("points.csv")),
        "--clean-only",
    ]);
    assert_eq!(code(&o), 0);
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((m["n"].as_u64(), m["f1"].as_f64()), (Some(12), Some(1.0)));
}

#[test]
fn clique_decisions() {
    let dir = TempDir::new().unwrap();
    // Triangle 1-2-3 with a pendant vertex 4.
    let edges = write(dir.path(), "g.txt", "4 4\n1 2\n2 3\n1 3\n3 4\n");
    let pts = dir.path().join("pts.csv");
    let o = bin(&["clique", "--edges", p(&edges), "--q", "3", "--points-out", p(&pts)]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["has_clique"], Value::Bool(true));
    assert_eq!(r["optimum_subset"], serde_json::json!([1, 2, 3]));
    assert_eq!(read_points_csv(&pts, false).unwrap().n_points(), 4);
    let o = bin(&["clique", "--edges", p(&edges), "--q", "4"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["has_clique"], Value::Bool(false));
    let bad = write(dir.path(), "bad.txt", "3 1\n0 1\n");
    assert_eq!(code(&bin(&["clique", "--edges", p(&bad)])), 1);
}

/// IDX writer independent of the library parser.
fn idx_images(images: &[[u8; 4]], magic: u32) -> Vec<u8> {
    let mut out = Vec::new();
    for word in [magic, images.len() as u32, 2, 2] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[test]
fn ingest_selects_classes() {
    let dir = TempDir::new().unwrap();
    let imgs: Vec<[u8; 4]> = (0..6u8).map(|i| [i, 0, 255, 51 * (i % 2)]).collect();
    let images = dir.path().join("img.idx");
    let labels = dir.path().join("lab.idx");
    fs::write(&images, idx_images(&imgs, 0x0000_0803)).unwrap();
    fs::write(&labels, idx_labels(&[3, 7, 3, 1, 7, 3])).unwrap();
    let out = dir.path().join("mnist");
    let o = bin(&[
        "ingest",
        "--images",
        p(&images),
        "--labels",
        p(&labels),
        "--classes",
        "7,3",
        "--per-class",
        "2",
        "--seed",
        "5",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["classes"], serde_json::json!([7, 3]));
    let idx: Vec<usize> = serde_json::from_value(manifest["indices"].clone()).unwrap();
    assert_eq!(idx.len(), 4);
    assert!(idx.windows(2).all(|w| w[0] < w[1]));
    let pts = read_points_csv(out.join("points.csv"), false).unwrap();
    let got = read_labels_csv(out.join("labels.csv"), None).unwrap();
    let digit = [3, 7, 3, 1, 7, 3];
    for (row, &i) in idx.iter().enumerate() {
        assert_eq!(pts.point(row), imgs[i].iter().map(|&b| b as f64 / 255.0).collect::<Vec<_>>());
        let want = if digit[i] == 7 { 0 } else { 1 };
        assert_eq!(got.label(row).cluster(), Some(want));
    }
    let bad = dir.path().join("bad.idx");
    fs::write(&bad, idx_images(&imgs, 0x0000_0802)).unwrap();
    let o = bin(&[
        "ingest",
        "--images",
        p(&bad),
        "--labels",
        p(&labels),
        "--classes",
        "3",
        "--per-class",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
    let o = bin(&[
        "ingest",
        "--images",
        p(&images),
        "--labels",
        p(&labels),
        "--classes",
        "1",
        "--per-class",
        "2",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&bin(&[])), 1);
    assert_eq!(code(&bin(&["solve", "--bogus"])), 1);
    assert_eq!(code(&bin(&["--help"])), 0);
}

fn sweep(dir: &Path, spec: &str, tag: &str) -> PathBuf {
    let spec = write(dir, &format!("{tag}.json"), spec);
    let out = dir.join(tag);
    let o = bin(&["sweep", "--spec", p(&spec), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn grid_fractions(dir: &Path) -> Vec<f64> {
    fs::read_to_string(dir.join("grid.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn sweep_single_certified_cell() {
    let dir = TempDir::new().unwrap();
    let spec = r#"{
        "axis1": {"name": "delta", "values": [5.0]},
        "axis2": {"name": "lambda", "values": [17.0]},
        "fixed": {"ball": {"k": 2, "d": 4, "n": 6, "delta": 5.0, "seed": 0}, "noise": {"m_far": 2}},
        "trials": 1, "seed": 3, "certify": true
    }"#;
    let out = sweep(dir.path(), spec, "one");
    assert_eq!(grid_fractions(&out), vec![1.0]);
    let run: Value =
        serde_json::from_str(fs::read_to_string(out.join("runs.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(run["verdict"], "CERTIFIED");
    assert_eq!(fs::read(out.join("heatmap.pgm")).unwrap(), b"P5\n1 1\n255\n\xff");
}

#[test]
fn sweep_is_reproducible_and_complete() {
    let dir = TempDir::new().unwrap();
    let spec = r#"{
        "axis1": {"name": "delta", "values": [1.0, 4.0]},
        "axis2": {"name": "m_far", "values": [0, 2]},
        "fixed": {"ball": {"k": 2, "d": 3, "n": 5, "delta": 1.0, "seed": 0}, "lambda": 12.0},
        "trials": 2, "seed": 9
    }"#;
    let a = sweep(dir.path(), spec, "a");
    let b = sweep(dir.path(), spec, "b");
    for f in ["grid.csv", "runs.jsonl", "heatmap.pgm"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(grid_fractions(&a).len(), 4);
    assert_eq!(fs::read_to_string(a.join("runs.jsonl")).unwrap().lines().count(), 8);
}

#[test]
fn sweep_below_separation_rarely_recovers() {
    let dir = TempDir::new().unwrap();
    let spec = r#"{
        "axis1": {"name": "delta", "values": [0.5]},
        "axis2": {"name": "n", "values": [8]},
        "fixed": {"ball": {"k": 2, "d": 2, "n": 8, "delta": 1.0, "seed": 0}},
        "trials": 4, "seed": 1
    }"#;
    let out = sweep(dir.path(), spec, "low");
    assert!(grid_fractions(&out)[0] <= 0.25);
}

#[test]
fn sweep_lambda_band_is_contiguous() {
    let dir = TempDir::new().unwrap();
    let spec = r#"{
        "axis1": {"name": "delta", "values": [4.0]},
        "axis2": {"name": "lambda", "values": [0.001, 0.5, 10.0, 20.0, 100000.0]},
        "fixed": {"ball": {"k": 2, "d": 4, "n": 6, "delta": 4.0, "seed": 0}, "noise": {"m_far": 3}},
        "trials": 2, "seed": 4
    }"#;
    let out = sweep(dir.path(), spec, "band");
    let f = grid_fractions(&out);
    let hits: Vec<usize> = (0..f.len()).filter(|&i| f[i] > 0.0).collect();
    assert!(!hits.is_empty(), "{f:?}");
    assert_eq!(hits.last().unwrap() - hits[0] + 1, hits.len(), "{f:?}");
    assert_eq!((f[0], f[4]), (0.0, 0.0), "{f:?}");
}
