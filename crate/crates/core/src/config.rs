//! Declarative run configuration: a `[model]` table plus optional
//! per-command tables. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::flowclass::FlowClassConfig;
use crate::spectral::{GrainSet, Marginal, PenroseStorm, SpectralModel, StormProfile};

/// A model as written in a config file; [`ModelSpec::build`] validates it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Iid { marginal: Marginal, indices: usize },
    MovingMaxima { storm: StormProfile, lambda: f64, dim: usize },
    PoissonLine { storm: StormProfile, lambda: f64 },
    PoissonLineMaxstable { storm: StormProfile, lambda: f64, alpha: f64 },
    Penrose { storm: PenroseStorm, lambda: f64 },
    BooleanSet { grain: GrainSet, lambda: f64, dim: usize },
    FrechetLift { masses: Vec<f64>, g: Vec<Vec<f64>>, alpha: f64 },
}

impl ModelSpec {
    /// Builds the model; Penrose storms are sampled on `grid`.
    pub fn build(&self, grid: &[Vec<f64>]) -> Result<SpectralModel> {
        match self.clone() {
            ModelSpec::Iid { marginal, indices } => SpectralModel::make_iid(marginal, indices),
            ModelSpec::MovingMaxima { storm, lambda, dim } => SpectralModel::make_moving_maxima(storm, lambda, dim),
            ModelSpec::PoissonLine { storm, lambda } => SpectralModel::make_poisson_line(storm, lambda),
            ModelSpec::PoissonLineMaxstable { storm, lambda, alpha } => {
                SpectralModel::make_poisson_line_maxstable(storm, lambda, alpha)
            }
            ModelSpec::Penrose { storm, lambda } => SpectralModel::make_penrose(storm, lambda, grid),
            ModelSpec::BooleanSet { grain, lambda, dim } => SpectralModel::make_boolean(grain, lambda, dim),
            ModelSpec::FrechetLift { masses, g, alpha } => SpectralModel::make_frechet_lift(masses, g, alpha),
        }
    }

    /// Dimension of the index set.
    pub fn index_dim(&self) -> Option<usize> {
        match self {
            ModelSpec::Iid { .. } | ModelSpec::FrechetLift { .. } => Some(1),
            ModelSpec::MovingMaxima { dim, .. } | ModelSpec::BooleanSet { dim, .. } => Some(*dim),
            ModelSpec::PoissonLine { .. } | ModelSpec::PoissonLineMaxstable { .. } => Some(2),
            ModelSpec::Penrose { storm, .. } => match storm {
                PenroseStorm::Brownian { .. } => Some(1),
                PenroseStorm::Fbm { .. } => Some(2),
            },
        }
    }
}

/// Grid points with the lattice shape they came from, `x` fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub points: Vec<Vec<f64>>,
    /// Per-axis node counts for lattices; `None` for point lists.
    pub shape: Option<Vec<usize>>,
}

/// Parses `"lo:hi:n"` axes separated by commas (a product lattice, first
/// axis fastest) or a comma-separated list of 1-D points.
pub fn parse_grid(s: &str) -> Result<Grid> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    if !s.contains(':') {
        let points = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map(|x| vec![x]).map_err(|_| Error::Config(format!("bad grid point {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Grid { points, shape: None });
    }
    let mut axes = Vec::new();
    for part in s.split(',') {
        let f: Vec<&str> = part.split(':').map(str::trim).collect();
        if f.len() != 3 {
            return Err(Error::Config(format!("axis {part:?} is not lo:hi:n")));
        }
        let lo: f64 = f[0].parse().map_err(|_| Error::Config(format!("bad lower bound {:?}", f[0])))?;
        let hi: f64 = f[1].parse().map_err(|_| Error::Config(format!("bad upper bound {:?}", f[1])))?;
        let n: usize = f[2].parse().map_err(|_| Error::Config(format!("bad count {:?}", f[2])))?;
        if n == 0 || !(hi >= lo) || (n == 1 && hi != lo) {
            return Err(Error::Config(format!("axis {part:?} is empty or reversed")));
        }
        axes.push(axis(lo, hi, n));
    }
    Ok(lattice(&axes))
}

/// `n` equally spaced values from `lo` to `hi`.
pub fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Product lattice of the axes, first axis fastest.
pub fn lattice(axes: &[Vec<f64>]) -> Grid {
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let points = (0..total)
        .map(|mut idx| {
            axes.iter()
                .map(|a| {
                    let v = a[idx % a.len()];
                    idx /= a.len();
                    v
                })
                .collect()
        })
        .collect();
    Grid { points, shape: Some(shape) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Pgm,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "pgm" => Ok(OutputFormat::Pgm),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub grid: Option<String>,
    #[serde(default = "default_budget")]
    pub error_budget: f64,
    #[serde(default = "default_format")]
    pub out: OutputFormat,
}

fn default_budget() -> f64 {
    1e-3
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { grid: None, error_budget: default_budget(), out: default_format() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FddCheckConfig {
    /// Probe point sets; defaults to one point and one pair.
    #[serde(default)]
    pub points: Option<Vec<Vec<Vec<f64>>>>,
    /// Marginal probabilities whose quantiles serve as thresholds.
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_fdd_replicates")]
    pub replicates: usize,
    #[serde(default = "default_fine_budget")]
    pub error_budget: f64,
}

fn default_levels() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_fdd_replicates() -> usize {
    100_000
}

fn default_fine_budget() -> f64 {
    1e-6
}

impl Default for FddCheckConfig {
    fn default() -> Self {
        Self {
            points: None,
            levels: default_levels(),
            replicates: default_fdd_replicates(),
            error_budget: default_fine_budget(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxidCheckConfig {
    #[serde(default = "default_parts")]
    pub parts: usize,
    #[serde(default = "default_maxid_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    #[serde(default = "default_maxid_ks")]
    pub ks_tolerance: f64,
    #[serde(default = "default_fine_budget")]
    pub error_budget: f64,
}

fn default_parts() -> usize {
    4
}

fn default_maxid_replicates() -> usize {
    10_000
}

fn default_maxid_ks() -> f64 {
    0.02
}

impl Default for MaxidCheckConfig {
    fn default() -> Self {
        Self {
            parts: default_parts(),
            replicates: default_maxid_replicates(),
            point: None,
            ks_tolerance: default_maxid_ks(),
            error_budget: default_fine_budget(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_audit_replicates")]
    pub replicates: usize,
}

fn default_trials() -> usize {
    1000
}

fn default_audit_replicates() -> usize {
    100_000
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { trials: default_trials(), replicates: default_audit_replicates() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure1Config {
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default = "default_hursts")]
    pub hursts: Vec<f64>,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_budget")]
    pub error_budget: f64,
}

fn default_size() -> usize {
    128
}

fn default_hursts() -> Vec<f64> {
    vec![0.1, 0.5, 0.9]
}

fn default_stride() -> usize {
    2
}

impl Default for Figure1Config {
    fn default() -> Self {
        Self { size: default_size(), hursts: default_hursts(), stride: default_stride(), error_budget: default_budget() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub fdd_check: Option<FddCheckConfig>,
    #[serde(default)]
    pub maxid_check: Option<MaxidCheckConfig>,
    #[serde(default)]
    pub classify: Option<FlowClassConfig>,
    #[serde(default)]
    pub metrics_audit: Option<AuditConfig>,
    #[serde(default)]
    pub figure1: Option<Figure1Config>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        Ok((Self::from_toml(&text)?, config_hash(&text)))
    }

    pub fn model(&self) -> Result<&ModelSpec> {
        self.model.as_ref().ok_or_else(|| invalid("the config has no [model] table"))
    }
}

/// Hex SHA-256 of the config text.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MM: &str = r#"
seed = 5

[model]
kind = "moving_maxima"
storm = { shape = "exp_bump", height = 1.0, scale = 1.0 }
lambda = 1.0
dim = 1

[simulate]
grid = "-5:5:11"
error_budget = 1e-3
"#;

    #[test]
    fn parses_a_full_config() {
        let c = RunConfig::from_toml(MM).unwrap();
        assert_eq!(c.seed, Some(5));
        let m = c.model().unwrap().build(&[]).unwrap();
        assert_eq!(m.name(), "moving_maxima");
        assert_eq!(c.simulate.unwrap().out, OutputFormat::Csv);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_toml(&format!("{MM}\nbogus = 1\n")).is_err());
        let bad = MM.replace("dim = 1", "dim = 1\ncolour = 2");
        assert!(RunConfig::from_toml(&bad).is_err());
        let bad = MM.replace("scale = 1.0 }", "scale = 1.0, width = 3 }");
        assert!(RunConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0:1:3").unwrap();
        assert_eq!(g.points, vec![vec![0.0], vec![0.5], vec![1.0]]);
        let g = parse_grid("0:1:2, 5:6:2").unwrap();
        assert_eq!(g.points, vec![vec![0.0, 5.0], vec![1.0, 5.0], vec![0.0, 6.0], vec![1.0, 6.0]]);
        assert_eq!(g.shape, Some(vec![2, 2]));
        let g = parse_grid("0,1,2").unwrap();
        assert_eq!(g.points.len(), 3);
        assert!(g.shape.is_none());
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        assert_eq!(config_hash("a"), config_hash("a"));
        assert_ne!(config_hash("a"), config_hash("b"));
        assert_eq!(config_hash("").len(), 64);
    }
}
