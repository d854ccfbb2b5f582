use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clat::container::Container;
use clat::formats::{self, Manifest};
use clat::pipeline::{IMAGES, METADATA};
use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str =
    r#"{"samples": {"fit": 1500, "classify": 500, "center": 4000, "sweep": 50, "pca": 60, "dataset": 120}}"#;

struct Ws {
    _dir: TempDir,
    root: PathBuf,
    cfg: PathBuf,
}

impl Ws {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let cfg = dir.path().join("cfg.json");
        fs::write(&cfg, SMALL).unwrap();
        let root = dir.path().join("ws");
        Self { _dir: dir, root, cfg }
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_clat"))
            .args(args)
            .arg("--out")
            .arg(&self.root)
            .arg("--config")
            .arg(&self.cfg)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Value {
        let o = self.run(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice(&o.stdout).unwrap()
    }

    fn fitted() -> Self {
        let ws = Self::new();
        ws.ok(&["gen-dataset"]);
        ws.ok(&["fit"]);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn block(path: &Path, name: &str) -> Vec<f64> {
    Container::read(path).unwrap().block(name).unwrap().data.clone()
}

#[test]
fn manifests_have_the_documented_keys_and_relative_paths() {
    let ws = Ws::fitted();
    for cmd in ["gen-dataset", "fit"] {
        let raw: Value =
            serde_json::from_str(&fs::read_to_string(ws.path(&format!("manifest-{cmd}.json"))).unwrap()).unwrap();
        let keys: Vec<&str> = raw.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["command", "version", "seed", "inputs", "outputs", "parameters"]);
        let m: Manifest = serde_json::from_value(raw).unwrap();
        assert_eq!(m.command, cmd);
        for o in &m.outputs {
            assert!(!Path::new(o).is_absolute(), "{o}");
            assert!(ws.path(o).exists(), "{o}");
        }
    }
}

#[test]
fn seed_flag_overrides_config_and_lands_in_manifest() {
    let ws = Ws::new();
    let m = ws.ok(&["gen-dataset", "--seed", "42", "--count", "110"]);
    assert_eq!(m["seed"], 42);
    let recs = formats::read_jsonl(&ws.path(METADATA)).unwrap();
    assert_eq!(recs.len(), 550);
}

#[test]
fn truncation_at_psi_one_returns_input() {
    let ws = Ws::fitted();
    ws.ok(&["truncate", "--psi", "1", "--condition", "C", "--count", "5"]);
    let p = ws.path("truncate-w.mdl");
    assert_eq!(block(&p, "input"), block(&p, "w"));
    ws.ok(&["truncate", "--psi", "0", "--condition", "C", "--count", "5"]);
    let w = block(&p, "w");
    let center = block(&ws.path("truncate-center.com"), "w_bar");
    for row in w.chunks(center.len()) {
        assert_eq!(row, &center[..]);
    }
}

#[test]
fn transformation_vectors_are_antisymmetric() {
    let ws = Ws::fitted();
    ws.ok(&["arithmetic", "--from", "A", "--to", "C", "--count", "4"]);
    ws.ok(&["arithmetic", "--from", "C", "--to", "A", "--count", "4"]);
    let ac = block(&ws.path("arithmetic-A-C.tvec"), "t");
    let ca = block(&ws.path("arithmetic-C-A.tvec"), "t");
    assert!(ac.iter().zip(&ca).all(|(a, b)| *a == -*b));
}

#[test]
fn interpolation_endpoints_match_the_conditions() {
    let ws = Ws::fitted();
    ws.ok(&[
        "interpolate",
        "--from",
        "A",
        "--to",
        "E",
        "--steps",
        "3",
        "--count",
        "2",
    ]);
    let rows = formats::read_csv(&ws.path("interpolate.csv")).unwrap().1;
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][1], "0");
    assert_eq!(rows[2][1], "1");
}

#[test]
fn inversion_reduces_loss() {
    let ws = Ws::fitted();
    let m = ws.ok(&["invert", "--steps", "200"]);
    let p = &m["parameters"];
    let losses = formats::read_csv(&ws.path("invert-loss.csv")).unwrap().1;
    let first: f64 = losses[0][1].parse().unwrap();
    assert!(p["final_loss"].as_f64().unwrap() < first);
    assert!(p["self_target"].as_bool().unwrap());
}

#[test]
fn wildcard_sampling_records_zeroed_blocks() {
    let ws = Ws::fitted();
    let m = ws.ok(&[
        "wildcard-sample",
        "--condition",
        "A",
        "--mask",
        "style",
        "--count",
        "10",
    ]);
    let z = m["parameters"]["zeroed_blocks"].as_array().unwrap();
    assert_eq!(z.len(), 1);
    assert_eq!(z[0]["name"], "style");
    assert_eq!(z[0]["start"], 4);
    assert_eq!(z[0]["end"], 10);
    let c = block(&ws.path("wildcard-sample-w.mdl"), "condition");
    assert!(c[4..10].iter().all(|&v| v == 0.0));
    assert!(ws.path("wildcard-sample.csv").exists());
}

#[test]
fn evaluating_a_copy_of_the_real_set_scores_zero() {
    let ws = Ws::new();
    ws.ok(&["gen-dataset"]);
    let out = ws.ok(&[
        "evaluate",
        "--fake-images",
        ws.path(IMAGES).to_str().unwrap(),
        "--fake-metadata",
        ws.path(METADATA).to_str().unwrap(),
    ]);
    let r = &out["report"];
    assert_eq!(r["fid"], 0.0);
    assert_eq!(r["fjd"]["value"], 0.0);
    assert_eq!(r["intra_fid"]["average"], 0.0);
    assert!(r.get("e_qual").is_none());
    assert!(r.get("e_art").is_none());
}

#[test]
fn report_keys_follow_the_documented_order() {
    let ws = Ws::fitted();
    ws.ok(&["evaluate"]);
    let text = fs::read_to_string(ws.path("report.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["fid", "fjd", "intra_fid", "n_qual", "warnings", "sample_counts"]);
    let nq = v["n_qual"].as_u64().unwrap() as usize;

    // all-ones labels give e_qual 1 and fill in e_art
    let labels = ws.path("labels.csv");
    let mut s = String::from("family,style,emotion,tags\n");
    for _ in 0..nq {
        s.push_str("1,1,1,1\n");
    }
    fs::write(&labels, s).unwrap();
    let out = ws.ok(&["evaluate", "--labels", labels.to_str().unwrap()]);
    let keys: Vec<&str> = out["report"].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        [
            "fid",
            "fjd",
            "intra_fid",
            "e_qual",
            "n_qual",
            "e_art",
            "warnings",
            "sample_counts"
        ]
    );
    assert_eq!(out["report"]["e_qual"], 1.0);
}

#[test]
fn external_embeddings_are_used_verbatim() {
    let ws = Ws::new();
    ws.ok(&["gen-dataset", "--count", "100"]);
    let n = formats::read_jsonl(&ws.path(METADATA)).unwrap().len();
    let mut s = String::from("d0,d1\n");
    for i in 0..n {
        s.push_str(&format!("{},{}\n", i % 7, (i * 3) % 11));
    }
    let emb = ws.path("emb.csv");
    fs::write(&emb, s).unwrap();
    let e = emb.to_str().unwrap();
    let meta = ws.path(METADATA);
    let out = ws.ok(&[
        "evaluate",
        "--fake-metadata",
        meta.to_str().unwrap(),
        "--real-embeddings",
        e,
        "--fake-embeddings",
        e,
    ]);
    assert_eq!(out["report"]["fid"], 0.0);
    assert_eq!(out["manifest"]["parameters"]["embedding"]["kind"], "external");
}

#[test]
fn exit_codes() {
    let ws = Ws::new();
    // usage
    assert_eq!(code(&ws.run(&["no-such-command"])), 2);
    assert_eq!(code(&ws.run(&["truncate"])), 2);
    assert_eq!(code(&ws.run(&["gen-dataset", "--seed", "x"])), 2);
    // data: nothing generated yet
    let o = ws.run(&["fit"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema.json"));

    ws.ok(&["gen-dataset"]);
    ws.ok(&["fit"]);
    assert_eq!(code(&ws.run(&["arithmetic", "--from", "A", "--to", "Q"])), 2);
    assert_eq!(code(&ws.run(&["wildcard-sample", "--condition", "A"])), 2);

    // evaluate lists every missing input at once
    let o = ws.run(&[
        "evaluate",
        "--labels",
        "nope1.csv",
        "--fake-images",
        "nope2.mdl",
        "--fake-metadata",
        "nope3.jsonl",
    ]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("nope1.csv") && err.contains("nope2.mdl") && err.contains("nope3.jsonl"),
        "{err}"
    );

    // corrupt container
    fs::write(ws.path("mapping.mdl"), b"CLATMDL1\x05").unwrap();
    assert_eq!(code(&ws.run(&["analyze"])), 3);

    // numeric: non-finite embeddings
    let n = formats::read_jsonl(&ws.path(METADATA)).unwrap().len();
    let mut s = String::from("d0\n");
    for i in 0..n {
        s.push_str(if i == 3 { "inf\n" } else { "1\n" });
    }
    let emb = ws.path("emb.csv");
    fs::write(&emb, s).unwrap();
    let e = emb.to_str().unwrap();
    let meta = ws.path(METADATA);
    let m = meta.to_str().unwrap();
    let o = ws.run(&[
        "evaluate",
        "--fake-metadata",
        m,
        "--real-embeddings",
        e,
        "--fake-embeddings",
        e,
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_config_is_a_data_error() {
    let ws = Ws::new();
    fs::write(&ws.cfg, r#"{"samples": {"fit": 0}, "bogus": 1}"#).unwrap();
    assert_eq!(code(&ws.run(&["gen-dataset"])), 3);
    fs::write(&ws.cfg, r#"{"samples": {"fit": 0}}"#).unwrap();
    let o = ws.run(&["gen-dataset"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("samples.fit"));
}
