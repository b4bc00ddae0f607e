//! End-to-end runs of the `maxid` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const MM: &str = r#"
seed = 11

[model]
kind = "moving_maxima"
storm = { shape = "exp_bump", height = 1.0, scale = 1.0 }
lambda = 1.0
dim = 1

[simulate]
grid = "-5:5:21"
"#;

const BOOLEAN: &str = r#"
[model]
kind = "boolean_set"
grain = { shape = "disk", radius = 1.0 }
lambda = 1.0
dim = 2
"#;

fn maxid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxid"))
        .current_dir(dir)
        .env_remove("MAXID_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mm.toml", MM);
    let a = maxid(tmp.path(), &["-c", &cfg, "simulate"]);
    let b = maxid(tmp.path(), &["-c", &cfg, "simulate"]);
    let c = maxid(tmp.path(), &["-c", &cfg, "--seed", "12", "simulate"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 22);
}

#[test]
fn seed_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mm.toml", MM);
    let run = |env: &str| {
        Command::new(env!("CARGO_BIN_EXE_maxid"))
            .current_dir(tmp.path())
            .env("MAXID_SEED", env)
            .args(["-c", &cfg, "simulate"])
            .output()
            .unwrap()
            .stdout
    };
    let flag = maxid(tmp.path(), &["-c", &cfg, "--seed", "3", "simulate"]).stdout;
    assert_eq!(run("3"), flag);
}

#[test]
fn boolean_field_is_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "b.toml", BOOLEAN);
    let out = maxid(tmp.path(), &["-c", &cfg, "simulate", "--grid", "-2:2:9,-2:2:9", "--out", "json", "-o", "f.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let field = report(tmp.path(), "f.json");
    let values = field["values"].as_array().unwrap();
    assert_eq!(values.len(), 81);
    assert!(values.iter().all(|v| v.as_f64() == Some(0.0) || v.as_f64() == Some(1.0)));
}

#[test]
fn pgm_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "b.toml", BOOLEAN);
    let out = maxid(tmp.path(), &["-c", &cfg, "simulate", "--grid", "-2:2:8,-1:1:4", "--out", "pgm"]);
    assert!(out.status.success());
    let (w, h, px) = maxid_pgm(&out.stdout);
    assert_eq!((w, h, px), (8, 4, 32));
}

fn maxid_pgm(bytes: &[u8]) -> (usize, usize, usize) {
    let header: Vec<&str> = std::str::from_utf8(&bytes[..bytes.len().min(32)])
        .unwrap_or_default()
        .split_whitespace()
        .take(4)
        .collect();
    assert_eq!(header[0], "P5");
    let (w, h): (usize, usize) = (header[1].parse().unwrap(), header[2].parse().unwrap());
    (w, h, bytes.len() - format!("P5\n{w} {h}\n255\n").len())
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &MM.replace("dim = 1", "dim = 1\nwidth = 3"));
    let out = maxid(tmp.path(), &["-c", &cfg, "fdd-check", "--report", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(tmp.path(), "r.json");
    assert_eq!(r["pass"], Value::Bool(false));
    assert!(r["error"].as_str().unwrap().contains("width"));
}

#[test]
fn missing_model_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = maxid(tmp.path(), &["simulate", "--grid", "0:1:3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fdd_check_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mm.toml", MM);
    let out = maxid(tmp.path(), &["-c", &cfg, "fdd-check", "--replicates", "20000", "--report", "r.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path(), "r.json");
    assert_eq!(r["schema"], 1);
    assert_eq!(r["command"], "fdd-check");
    assert_eq!(r["seed"], 11);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(r["statistics"]["probes"].as_array().unwrap().len(), 6);
}

#[test]
fn metrics_audit_small() {
    let tmp = tempfile::tempdir().unwrap();
    let out = maxid(tmp.path(), &["metrics-audit", "--trials", "20", "--replicates", "2000", "--report", "a.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path(), "a.json");
    assert_eq!(r["pass"], Value::Bool(true));
    assert!(r["config_hash"].is_null());
}

#[test]
fn maxid_check_small() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mm.toml", MM);
    let out = maxid(tmp.path(), &["-c", &cfg, "maxid-check", "--report", "m.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(tmp.path(), "m.json")["command"], "maxid-check");
}

#[test]
fn classify_with_expectation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mm.toml", MM);
    let ok = maxid(tmp.path(), &["-c", &cfg, "classify", "--samples", "30", "--expect", "dissipative"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let r = report(tmp.path(), "classify.json");
    assert_eq!(r["command"], "classify");
    assert!(tmp.path().join("classify-curves.csv").exists());
    let bad = maxid(tmp.path(), &["-c", &cfg, "classify", "--samples", "30", "--expect", "conservative", "--report", "c2.json"]);
    assert_eq!(bad.status.code(), Some(1));
}
