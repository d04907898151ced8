//! End-to-end runs of the `gcba` binary on the corpus.

use serde_json::Value;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn gcba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcba")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Runs a command writing its report to a temp file; returns (exit code, report).
fn report(dir: &Path, args: &[&str]) -> (i32, Value) {
    let json = dir.join("out.json");
    let mut all = args.to_vec();
    all.extend(["--json", json.to_str().unwrap()]);
    let out = gcba(&all);
    let text = std::fs::read_to_string(&json).unwrap_or_else(|_| panic!("no report; stderr: {}", String::from_utf8_lossy(&out.stderr)));
    (code(&out), serde_json::from_str(&text).unwrap())
}

fn p(name: &str) -> String {
    corpus(name).to_str().unwrap().to_string()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&gcba(&["validate", &p("theta_graph.json")])), 0);
    assert_eq!(code(&gcba(&["validate", &p("flat_torus.json")])), 0);
    let book = gcba(&["validate", &p("three_page_book.json")]);
    assert_eq!(code(&book), 2);
    let v: Value = serde_json::from_slice(&book.stdout).unwrap();
    assert_eq!(v["report"]["completeness"]["pass"], false);
    assert_eq!(v["report"]["curvature"]["pass"], true);
    let pillow = gcba(&["validate", &p("pillowcase.json")]);
    assert_eq!(code(&pillow), 2);
    let v: Value = serde_json::from_slice(&pillow.stdout).unwrap();
    assert_eq!(v["report"]["completeness"]["pass"], true);
    assert_eq!(v["report"]["curvature"]["pass"], false);
    assert_eq!(code(&gcba(&["validate", "/no/such/file.json"])), 3);
}

#[test]
fn analyze_masses_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    for (name, expect) in [("theta_circle.json", vec![0.0, 0.0, 3.0]), ("theta_graph.json", vec![0.0, 3.0]), ("flat_torus.json", vec![0.0, 0.0, 1.0])] {
        let svg = dir.path().join("plot.svg");
        let (c, v) = report(dir.path(), &["analyze", &p(name), "--svg", svg.to_str().unwrap()]);
        assert_eq!(c, 0);
        assert_eq!(v["schema_version"], 1);
        let masses: Vec<f64> = v["report"]["measure"]["masses"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(masses.len(), expect.len(), "{name}");
        for (m, e) in masses.iter().zip(&expect) {
            assert!((m - e).abs() < 1e-12, "{name}: {masses:?}");
        }
        assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
        let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["schema_version"], 1);
        assert_eq!(manifest["command"], "analyze");
        let hash: String = Sha256::digest(std::fs::read(corpus(name)).unwrap()).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(manifest["input_hashes"][p(name)], hash);
        assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
        assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
        assert!(manifest["config"]["seed"].is_u64());
    }
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let run = |out: &Path, threads: &str| {
        let s = Command::new(env!("CARGO_BIN_EXE_gcba"))
            .env("GCBA_THREADS", threads)
            .args(["strainers", &p("theta_circle.json"), "--json", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(s.success());
    };
    run(&a, "1");
    run(&b, "3");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let other_seed = dir.path().join("c.json");
    assert_eq!(code(&gcba(&["analyze", &p("theta_circle.json"), "--seed", "7", "--json", other_seed.to_str().unwrap()])), 0);
    let again = dir.path().join("d.json");
    assert_eq!(code(&gcba(&["analyze", &p("theta_circle.json"), "--seed", "7", "--json", again.to_str().unwrap()])), 0);
    assert_eq!(std::fs::read(&other_seed).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn strainer_atlas_and_ceilings() {
    let dir = tempfile::tempdir().unwrap();
    let (c, v) = report(dir.path(), &["strainers", &p("theta_graph.json")]);
    assert_eq!(c, 0);
    let atlas = v["report"]["atlas"].as_array().unwrap();
    // vertices a and b carry no strainer; points on edges are 1-strained
    let ks: Vec<u64> = atlas.iter().map(|e| e["k"].as_u64().unwrap()).collect();
    assert_eq!(&ks[..2], &[0, 0]);
    assert!(ks[2..].iter().all(|&k| k == 1));

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"kappa":0.0,"simplices":[],"gluings":[]}"#).unwrap();
    let (c, v) = report(dir.path(), &["strainers", empty.to_str().unwrap()]);
    assert_eq!(c, 0);
    assert_eq!(v["report"]["atlas"].as_array().unwrap().len(), 0);

    let cfg = dir.path().join("tight.toml");
    std::fs::write(&cfg, "[ceilings]\nk0 = 1\n").unwrap();
    assert_eq!(code(&gcba(&["strainers", &p("flat_torus.json"), "--config", cfg.to_str().unwrap()])), 2);
    let cfg = dir.path().join("tight_c0.json");
    std::fs::write(&cfg, r#"{"ceilings": {"c0": 1}}"#).unwrap();
    assert_eq!(code(&gcba(&["strainers", &p("theta_graph.json"), "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn bad_config_and_options_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "no_such_knob = 3\n").unwrap();
    assert_eq!(code(&gcba(&["validate", &p("theta_graph.json"), "--config", cfg.to_str().unwrap()])), 3);
    assert_eq!(code(&gcba(&["flows", &p("flat_torus.json"), "--point", "99:1,0,0"])), 3);
    assert_eq!(code(&gcba(&["chart", &p("flat_torus.json"), "--point", "0:0.5,0.5"])), 3);
    assert_eq!(code(&gcba(&["strainers", &p("flat_torus.json"), "--delta", "2"])), 3);
}

#[test]
fn converge_families() {
    let dir = tempfile::tempdir().unwrap();
    let (c, v) = report(dir.path(), &["converge", &p("families/spine_rescaling.json")]);
    assert_eq!(c, 0);
    let target = 1.5 * PI;
    for row in v["report"]["table"].as_array().unwrap() {
        let m = row["top_mass"].as_f64().unwrap();
        assert!((m - target).abs() <= 0.01 * target, "{row}");
    }
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["input_hashes"].as_object().unwrap().len(), 2);

    let (c, v) = report(dir.path(), &["converge", &p("families/constant_pillowcase.json")]);
    assert_eq!(c, 0);
    let rows = v["report"]["table"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["top_mass"] == rows[0]["top_mass"] && r["gh_to_limit"].as_f64().unwrap() < 1e-9));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"schema_version": 2, "members": [], "limit": {"kind": "complex", "complex": "x.json", "region": {"kind": "whole"}}}"#).unwrap();
    let out = gcba(&["converge", broken.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema version 2"));
    std::fs::write(&broken, r#"{"schema_version": 1, "members": 3}"#).unwrap();
    assert_eq!(code(&gcba(&["converge", broken.to_str().unwrap()])), 3);
}

#[test]
fn flows_and_charts_pass_on_flat_pieces() {
    let dir = tempfile::tempdir().unwrap();
    let (c, v) = report(dir.path(), &["flows", &p("flat_torus.json")]);
    assert_eq!(c, 0);
    assert_eq!(v["report"]["dichotomy"]["verdict"], "Injective");
    assert_eq!(v["report"]["tracks"].as_array().unwrap().len(), 20);

    // a point inside a page of the book times a circle
    let (c, v) = report(dir.path(), &["chart", &p("theta_circle.json")]);
    assert_eq!(c, 0);
    assert_eq!(v["report"]["chart"]["k"], 2);
    assert_eq!(v["report"]["alpha"]["pass"], true);
    assert_eq!(v["report"]["lengths"].as_array().unwrap().len(), 50);

    let svg = dir.path().join("chart.svg");
    let (c, _) = report(dir.path(), &["chart", &p("flat_torus.json"), "--svg", svg.to_str().unwrap()]);
    assert_eq!(c, 0);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polygon"));
}
