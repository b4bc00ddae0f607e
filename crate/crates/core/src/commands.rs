//! Workflows behind the `maxid` binary. Each returns a [`RunReport`] (or the
//! artifacts it produced) and never touches stdout.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{lattice, axis, AuditConfig, FddCheckConfig, Figure1Config, Grid, MaxidCheckConfig, ModelSpec, OutputFormat};
use crate::error::{invalid, Error, Result};
use crate::exactdist::{fdd_cdf, FddQuery};
use crate::field::{simulate, FieldRealization};
use crate::flowclass::{classify, FlowClassConfig, FlowClassReport, Verdict};
use crate::integrator::{metric_audit, AUDIT_TOLERANCE};
use crate::point_process::{sample_poisson, thin, PointConfig};
use crate::quadrature::QuadratureSpec;
use crate::raster::Raster;
use crate::rng::derive_seed;
use crate::spectral::{PenroseStorm, SpectralModel};
use crate::stats::{binomial_sigma, ks_two_sample};

/// Version of the JSON report layout.
pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `statistic ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, statistic: f64, tolerance: f64) -> Self {
        Self { name: name.into(), statistic, tolerance, pass: statistic <= tolerance }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub config_hash: Option<String>,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub statistics: Value,
    pub wall_time_s: f64,
}

impl RunReport {
    fn new(command: &str, seed: u64, checks: Vec<Check>, statistics: Value, start: Instant) -> Self {
        Self {
            schema: SCHEMA,
            command: command.to_string(),
            config_hash: None,
            seed,
            pass: checks.iter().all(|c| c.pass),
            checks,
            statistics,
            wall_time_s: start.elapsed().as_secs_f64(),
        }
    }

    pub fn with_hash(mut self, hash: Option<String>) -> Self {
        self.config_hash = hash;
        self
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// `sup_i f_t(U_i)` at a few points, sequentially.
fn maxima_at(model: &SpectralModel, points: &[Vec<f64>], config: &PointConfig) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|t| {
            config.atoms.iter().try_fold(0.0f64, |m, a| Ok(m.max(model.eval(t, a)?)))
        })
        .collect()
}

/// Simulates a field and renders it in the requested format.
pub fn simulate_cmd(spec: &ModelSpec, grid: &Grid, budget: f64, seed: u64, format: OutputFormat) -> Result<(FieldRealization, Vec<u8>)> {
    let model = spec.build(&grid.points)?;
    let field = simulate(&model, &grid.points, budget, seed)?;
    let bytes = match format {
        OutputFormat::Csv => field.to_csv().into_bytes(),
        OutputFormat::Json => (serde_json::to_string_pretty(&field)? + "\n").into_bytes(),
        OutputFormat::Pgm => {
            let (w, h) = match grid.shape.as_deref() {
                Some([w]) => (*w, 1),
                Some([w, h]) => (*w, *h),
                _ => return Err(invalid("PGM output needs a 1-D or 2-D lattice grid")),
            };
            Raster::new(w, h, field.values.clone())?.to_pgm()
        }
    };
    Ok((field, bytes))
}

pub struct Figure1Panel {
    pub hurst: f64,
    pub field: FieldRealization,
    pub raster: Raster,
}

/// Square lattice `((i − n/2)/(n/2))` on both axes.
pub fn figure1_grid(size: usize) -> Grid {
    let half = (size / 2) as f64;
    let a = axis(-1.0, (size as f64 - 1.0 - half) / half, size);
    lattice(&[a.clone(), a])
}

/// Penrose fields driven by isotropic fBm, one per Hurst exponent.
pub fn figure1(cfg: &Figure1Config, seed: u64) -> Result<Vec<Figure1Panel>> {
    if cfg.size < 2 {
        return Err(invalid("figure size must be at least 2"));
    }
    let grid = figure1_grid(cfg.size);
    cfg.hursts
        .iter()
        .enumerate()
        .map(|(i, &hurst)| {
            let storm = PenroseStorm::Fbm { hurst, sigma2: 1.0, stride: cfg.stride };
            let model = SpectralModel::make_penrose(storm, 1.0, &grid.points)?;
            let field = simulate(&model, &grid.points, cfg.error_budget, derive_seed(seed, i as u64))?;
            let raster = Raster::new(cfg.size, cfg.size, field.values.clone())?;
            Ok(Figure1Panel { hurst, field, raster })
        })
        .collect()
}

pub fn figure1_files(panels: &[Figure1Panel], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    panels
        .iter()
        .map(|p| {
            let path = dir.join(format!("figure1_H{}.pgm", p.hurst));
            std::fs::write(&path, p.raster.to_pgm())?;
            Ok(path)
        })
        .collect()
}

pub fn figure1_report(panels: &[Figure1Panel], seed: u64, start: Instant) -> RunReport {
    let rough: Vec<f64> = panels.iter().map(|p| p.raster.mean_neighbor_difference()).collect();
    let ordered = rough.windows(2).all(|w| w[1] < w[0]);
    let stats = json!({
        "panels": panels.iter().zip(&rough).map(|(p, r)| json!({
            "hurst": p.hurst,
            "width": p.raster.width,
            "height": p.raster.height,
            "mean_neighbor_difference": r,
            "certificate": p.field.certificate,
            "atoms": p.field.atoms,
        })).collect::<Vec<_>>(),
    });
    let checks = vec![Check {
        name: "roughness decreases with H".into(),
        statistic: if ordered { 0.0 } else { 1.0 },
        tolerance: 0.0,
        pass: ordered,
    }];
    RunReport::new("figure1", seed, checks, stats, start)
}

/// The randomized suites for the γ bound and both Ky Fan inequalities.
pub fn metrics_audit_cmd(cfg: &AuditConfig, seed: u64) -> Result<RunReport> {
    let start = Instant::now();
    if cfg.trials == 0 || cfg.replicates == 0 {
        return Err(invalid("trials and replicates must be positive"));
    }
    let trials = metric_audit(cfg.trials, seed, cfg.replicates)?;
    let count = |f: &dyn Fn(&crate::integrator::AuditTrial) -> f64| trials.iter().filter(|t| f(t) < -AUDIT_TOLERANCE).count() as f64;
    let checks = vec![
        Check::at_most("gamma bound violations", count(&|t| t.gamma_margin), 0.0),
        Check::at_most("ky fan upper violations", count(&|t| t.upper_margin), 0.0),
        Check::at_most("ky fan lower violations", count(&|t| t.lower_margin), 0.0),
    ];
    let min = |f: &dyn Fn(&crate::integrator::AuditTrial) -> f64| trials.iter().map(f).fold(f64::INFINITY, f64::min);
    let stats = json!({
        "trials": cfg.trials,
        "replicates": cfg.replicates,
        "numeric_tolerance": AUDIT_TOLERANCE,
        "min_gamma_margin": min(&|t| t.gamma_margin),
        "min_upper_margin": min(&|t| t.upper_margin),
        "min_lower_margin": min(&|t| t.lower_margin),
        "per_trial": trials,
    });
    Ok(RunReport::new("metrics-audit", seed, checks, stats, start))
}

fn default_probes(spec: &ModelSpec) -> Result<Vec<Vec<Vec<f64>>>> {
    let d = spec.index_dim().ok_or_else(|| invalid("model has no index dimension"))?;
    let t0 = vec![0.0; d];
    let mut t1 = t0.clone();
    t1[0] = 1.0;
    Ok(vec![vec![t0.clone()], vec![t0, t1]])
}

fn distinct(points: impl Iterator<Item = Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Simulated joint CDFs against `exp(−μ(∪{f_{t_j} ≥ x_j}))` with the same
/// marginal level at every point of each probe.
pub fn fdd_check_cmd(spec: &ModelSpec, cfg: &FddCheckConfig, seed: u64) -> Result<RunReport> {
    let start = Instant::now();
    let probes = match &cfg.points {
        Some(p) => p.clone(),
        None => default_probes(spec)?,
    };
    if probes.is_empty() || probes.iter().any(|p| p.is_empty()) || cfg.levels.is_empty() || cfg.replicates == 0 {
        return Err(invalid("fdd-check needs probe points, levels and replicates"));
    }
    if cfg.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
        return Err(invalid("levels must lie in (0, 1)"));
    }
    let all = distinct(probes.iter().flatten().cloned());
    let model = spec.build(&all)?;
    let q = QuadratureSpec { seed: derive_seed(seed, u64::MAX), ..QuadratureSpec::default() };
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (pi, points) in probes.iter().enumerate() {
        let plan = model.truncation_plan(points, cfg.error_budget)?;
        let thresholds: Vec<Vec<f64>> = cfg
            .levels
            .iter()
            .map(|&l| points.iter().map(|t| model.margin_quantile(t, l)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let mut below = vec![0usize; thresholds.len()];
        for r in 0..cfg.replicates {
            let config = sample_poisson(model.intensity(), &plan.window, derive_seed(derive_seed(seed, pi as u64), r as u64))?;
            let m = maxima_at(&model, points, &config)?;
            for (k, xs) in thresholds.iter().enumerate() {
                if m.iter().zip(xs).all(|(v, x)| v < x) {
                    below[k] += 1;
                }
            }
        }
        for (k, xs) in thresholds.iter().enumerate() {
            let query = FddQuery::new(points.clone(), xs.clone())?;
            let exact = fdd_cdf(&model, &query, &q)?;
            let n = cfg.replicates;
            let empirical = below[k] as f64 / n as f64;
            let tol = 3.0 * binomial_sigma(exact.value, n) + exact.error + plan.certificate;
            let diff = (empirical - exact.value).abs();
            let check = Check::at_most(format!("probe {pi} level {}", cfg.levels[k]), diff, tol);
            rows.push(json!({
                "query": { "points": points, "thresholds": xs },
                "exact": exact.value,
                "exact_error": exact.error,
                "empirical": empirical,
                "n": n,
                "tolerance": tol,
                "pass": check.pass,
            }));
            checks.push(check);
        }
    }
    let stats = json!({ "model": model.name(), "probes": rows });
    Ok(RunReport::new("fdd-check", seed, checks, stats, start))
}

/// Margin samples at `t` of the field at `μ` and of the pointwise maximum of
/// `parts` independent fields at `μ/parts` (thinned samples at `μ`).
pub fn divisibility_samples(model: &SpectralModel, t: &[f64], parts: usize, replicates: usize, budget: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if parts == 0 || replicates == 0 {
        return Err(invalid("parts and replicates must be positive"));
    }
    let points = vec![t.to_vec()];
    let plan = model.truncation_plan(&points, budget)?;
    let keep = 1.0 / parts as f64;
    let mut whole = Vec::with_capacity(replicates);
    let mut split = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let base = derive_seed(seed, r as u64);
        let config = sample_poisson(model.intensity(), &plan.window, derive_seed(base, 0))?;
        whole.push(maxima_at(model, &points, &config)?[0]);
        let mut m: f64 = 0.0;
        for j in 0..parts {
            let s = derive_seed(base, 1 + j as u64);
            let piece = thin(&sample_poisson(model.intensity(), &plan.window, s)?, keep, derive_seed(s, 1))?;
            m = m.max(maxima_at(model, &points, &piece)?[0]);
        }
        split.push(m);
    }
    Ok((whole, split))
}

pub fn maxid_check_cmd(spec: &ModelSpec, cfg: &MaxidCheckConfig, seed: u64) -> Result<RunReport> {
    let start = Instant::now();
    let t = match &cfg.point {
        Some(t) => t.clone(),
        None => vec![0.0; spec.index_dim().ok_or_else(|| invalid("model has no index dimension"))?],
    };
    let model = spec.build(std::slice::from_ref(&t))?;
    let (whole, split) = divisibility_samples(&model, &t, cfg.parts, cfg.replicates, cfg.error_budget, seed)?;
    let ks = ks_two_sample(&whole, &split);
    let checks = vec![Check::at_most(format!("margin KS, {} parts", cfg.parts), ks, cfg.ks_tolerance)];
    let stats = json!({
        "model": model.name(),
        "point": t,
        "parts": cfg.parts,
        "replicates": cfg.replicates,
        "ks": ks,
    });
    Ok(RunReport::new("maxid-check", seed, checks, stats, start))
}

/// Runs the flow test; passes when a verdict is reached and, if `expect` is
/// given, it matches.
pub fn classify_cmd(spec: &ModelSpec, cfg: &FlowClassConfig, expect: Option<Verdict>) -> Result<(RunReport, FlowClassReport)> {
    let start = Instant::now();
    let d = spec.index_dim().ok_or_else(|| invalid("model has no index dimension"))?;
    let model = spec.build(&[vec![0.0; d]])?;
    let report = classify(&model, cfg)?;
    let decided = report.verdict != Verdict::Undecided;
    let matches = expect.is_none_or(|e| e == report.verdict);
    let checks = vec![Check {
        name: match expect {
            Some(e) => format!("verdict is {e:?}").to_lowercase(),
            None => "verdict is decided".into(),
        },
        statistic: report.diverging_fraction,
        tolerance: match report.verdict {
            Verdict::Dissipative => crate::flowclass::DISSIPATIVE_FRACTION,
            _ => crate::flowclass::CONSERVATIVE_FRACTION,
        },
        pass: decided && matches,
    }];
    let stats = json!({
        "model": report.model,
        "psi": report.psi,
        "radii": report.radii,
        "verdict": report.verdict,
        "diverging_fraction": report.diverging_fraction,
        "psi_integral": report.psi_integral,
    });
    Ok((RunReport::new("classify", cfg.seed, checks, stats, start), report))
}

/// A failed report as an error, for callers that want `?`.
pub fn require_pass(report: &RunReport) -> Result<()> {
    match report.failures().first() {
        None => Ok(()),
        Some(c) => Err(Error::InvalidParameter(format!("{} failed: {} > {}", c.name, c.statistic, c.tolerance))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_grid, RunConfig};

    fn mm() -> ModelSpec {
        RunConfig::from_toml(
            r#"
[model]
kind = "moving_maxima"
storm = { shape = "exp_bump", height = 1.0, scale = 1.0 }
lambda = 1.0
dim = 1
"#,
        )
        .unwrap()
        .model
        .unwrap()
    }

    #[test]
    fn simulate_is_byte_identical_per_seed() {
        let g = parse_grid("-3:3:64").unwrap();
        let (_, a) = simulate_cmd(&mm(), &g, 1e-3, 8, OutputFormat::Csv).unwrap();
        let (_, b) = simulate_cmd(&mm(), &g, 1e-3, 8, OutputFormat::Csv).unwrap();
        assert_eq!(a, b);
        let (_, c) = simulate_cmd(&mm(), &g, 1e-3, 9, OutputFormat::Csv).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pgm_needs_a_lattice() {
        let g = parse_grid("0,1,2").unwrap();
        assert!(simulate_cmd(&mm(), &g, 1e-3, 1, OutputFormat::Pgm).is_err());
        let g = parse_grid("0:1:4,0:1:3").unwrap();
        let spec = ModelSpec::MovingMaxima { storm: crate::spectral::StormProfile::exp_bump(1.0, 1.0).unwrap(), lambda: 1.0, dim: 2 };
        let (_, bytes) = simulate_cmd(&spec, &g, 1e-3, 1, OutputFormat::Pgm).unwrap();
        assert!(bytes.starts_with(b"P5\n4 3\n255\n"));
        assert_eq!(bytes.len(), 11 + 12);
    }

    #[test]
    fn small_fdd_check_passes() {
        let cfg = FddCheckConfig { replicates: 4000, ..FddCheckConfig::default() };
        let r = fdd_check_cmd(&mm(), &cfg, 2).unwrap();
        assert!(r.pass, "{}", serde_json::to_string_pretty(&r).unwrap());
        assert_eq!(r.checks.len(), 6);
        assert_eq!(r.schema, 1);
    }

    #[test]
    fn audit_report_shape() {
        let r = metrics_audit_cmd(&AuditConfig { trials: 5, replicates: 2000 }, 1).unwrap();
        assert!(r.pass);
        assert_eq!(r.statistics["per_trial"].as_array().unwrap().len(), 5);
        let again = metrics_audit_cmd(&AuditConfig { trials: 5, replicates: 2000 }, 1).unwrap();
        assert_eq!(r.statistics["per_trial"], again.statistics["per_trial"]);
    }

    #[test]
    fn figure_grid_contains_origin() {
        let g = figure1_grid(8);
        assert_eq!(g.points.len(), 64);
        assert!(g.points.contains(&vec![0.0, 0.0]));
        assert_eq!(g.points[0], vec![-1.0, -1.0]);
    }
}
