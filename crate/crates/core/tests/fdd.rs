//! Simulated joint CDFs against the exact finite-dimensional law, for every
//! registered model kind.

use maxid_core::commands::fdd_check_cmd;
use maxid_core::config::{FddCheckConfig, RunConfig};
use maxid_core::rng::{derive_seed, DEFAULT_SEED};

const REPLICATES: usize = 100_000;

fn check(stream: u64, model_toml: &str) {
    let cfg = RunConfig::from_toml(&format!("[model]\n{model_toml}")).unwrap();
    let fdd = FddCheckConfig { replicates: REPLICATES, ..FddCheckConfig::default() };
    let report = fdd_check_cmd(cfg.model().unwrap(), &fdd, derive_seed(DEFAULT_SEED, stream)).unwrap();
    assert_eq!(report.checks.len(), 6);
    for c in &report.checks {
        assert!(c.pass, "{}: {} > {}", c.name, c.statistic, c.tolerance);
    }
}

#[test]
fn iid() {
    check(1, r#"kind = "iid"
marginal = { law = "frechet", alpha = 2.0, scale = 1.5 }
indices = 2"#);
}

#[test]
fn moving_maxima() {
    check(2, r#"kind = "moving_maxima"
storm = { shape = "exp_bump", height = 1.0, scale = 1.0 }
lambda = 1.0
dim = 1"#);
}

#[test]
fn moving_maxima_indicator_plane() {
    check(3, r#"kind = "moving_maxima"
storm = { shape = "indicator", height = 2.0, scale = 0.8 }
lambda = 0.7
dim = 2"#);
}

#[test]
fn poisson_line() {
    check(4, r#"kind = "poisson_line"
storm = { shape = "exp_bump", height = 1.0, scale = 1.0 }
lambda = 0.2"#);
}

#[test]
fn poisson_line_maxstable() {
    check(5, r#"kind = "poisson_line_maxstable"
storm = { shape = "exp_bump", height = 1.0, scale = 1.0 }
lambda = 1.0
alpha = 1.0"#);
}

#[test]
fn boolean_set() {
    check(6, r#"kind = "boolean_set"
grain = { shape = "disk", radius = 0.6 }
lambda = 1.0
dim = 2"#);
}

#[test]
fn frechet_lift() {
    check(7, r#"kind = "frechet_lift"
masses = [0.5, 1.5]
g = [[1.0, 0.2], [0.3, 1.0]]
alpha = 1.5"#);
}

#[test]
fn penrose_brownian() {
    check(8, r#"kind = "penrose"
storm = { type = "brownian", k = 1 }
lambda = 1.0"#);
}

#[test]
fn penrose_fbm() {
    check(9, r#"kind = "penrose"
storm = { type = "fbm", hurst = 0.5, sigma2 = 1.0, stride = 1 }
lambda = 1.0"#);
}
