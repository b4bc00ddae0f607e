//! Exact Gaussian storm paths: Brownian motion in `R^k` on a time grid and
//! isotropic fractional Brownian fields on planar node sets.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Largest node count accepted by the dense factorization.
pub const MAX_DENSE_NODES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbmParams {
    pub hurst: f64,
    pub sigma2: f64,
}

impl FbmParams {
    pub fn new(hurst: f64, sigma2: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst <= 1.0) {
            return Err(invalid(format!("Hurst exponent must lie in (0, 1], got {hurst}")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self { hurst, sigma2 })
    }

    /// The zero field (`σ² = 0`), used to test the deterministic limit.
    pub fn degenerate(hurst: f64) -> Result<Self> {
        let mut p = Self::new(hurst, 1.0)?;
        p.sigma2 = 0.0;
        Ok(p)
    }

    pub fn covariance(&self, t: &[f64], s: &[f64]) -> f64 {
        let h2 = 2.0 * self.hurst;
        let nt = norm(t).powf(h2);
        let ns = norm(s).powf(h2);
        let d: Vec<f64> = t.iter().zip(s).map(|(a, b)| a - b).collect();
        0.5 * self.sigma2 * (nt + ns - norm(&d).powf(h2))
    }

    pub fn variance(&self, t: &[f64]) -> f64 {
        self.sigma2 * norm(t).powf(2.0 * self.hurst)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A sampled path: `k` values per node, node-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPath {
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub k: usize,
    pub seed: u64,
}

impl GaussianPath {
    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.k..(node + 1) * self.k]
    }
}

/// Two-sided Brownian motion with `k` independent coordinates, pinned to 0
/// at time 0, written into `out` node-major.
pub fn brownian_values(k: usize, times: &[f64], rng: &mut SimRng, out: &mut Vec<f64>) -> Result<()> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("brownian times must be strictly increasing"));
    }
    let zero = times
        .iter()
        .position(|&t| t == 0.0)
        .ok_or_else(|| invalid("brownian times must contain 0"))?;
    let base = out.len();
    out.resize(base + times.len() * k, 0.0);
    for i in zero + 1..times.len() {
        let sd = (times[i] - times[i - 1]).sqrt();
        for c in 0..k {
            let z: f64 = StandardNormal.sample(rng);
            out[base + i * k + c] = out[base + (i - 1) * k + c] + sd * z;
        }
    }
    for i in (0..zero).rev() {
        let sd = (times[i + 1] - times[i]).sqrt();
        for c in 0..k {
            let z: f64 = StandardNormal.sample(rng);
            out[base + i * k + c] = out[base + (i + 1) * k + c] + sd * z;
        }
    }
    Ok(())
}

pub fn brownian_path(k: usize, times: &[f64], seed: u64) -> Result<GaussianPath> {
    if k == 0 {
        return Err(invalid("brownian dimension must be positive"));
    }
    let mut values = Vec::new();
    brownian_values(k, times, &mut rng_from_seed(seed), &mut values)?;
    Ok(GaussianPath { grid: times.iter().map(|&t| vec![t]).collect(), values, k, seed })
}

/// Lower Cholesky factor of the fBm covariance on the non-origin nodes.
#[derive(Debug)]
pub struct FbmFactor {
    origin: usize,
    l: DMatrix<f64>,
    pub jitter: f64,
}

impl FbmFactor {
    fn build(params: &FbmParams, nodes: &[Vec<f64>]) -> Result<Self> {
        let origin = nodes
            .iter()
            .position(|t| t.iter().all(|&x| x == 0.0))
            .ok_or_else(|| invalid("fBm grid must contain the origin"))?;
        let rest: Vec<&Vec<f64>> = nodes.iter().enumerate().filter(|(i, _)| *i != origin).map(|(_, t)| t).collect();
        let n = rest.len();
        let c = DMatrix::from_fn(n, n, |i, j| params.covariance(rest[i], rest[j]));
        let scale = if n == 0 { 0.0 } else { c.trace() / n as f64 };
        let mut jitter = 0.0;
        loop {
            let mut m = c.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            if let Some(ch) = m.cholesky() {
                return Ok(Self { origin, l: ch.unpack(), jitter });
            }
            jitter = if jitter == 0.0 { 1e-15 * scale } else { jitter * 10.0 };
            if jitter > 1e-10 * scale * (1.0 + 1e-9) {
                return Err(Error::NotPositiveSemidefinite);
            }
        }
    }

    pub fn nodes(&self) -> usize {
        self.l.nrows() + 1
    }

    pub fn draw(&self, rng: &mut SimRng) -> Vec<f64> {
        let n = self.l.nrows();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let x = &self.l * z;
        let mut out = Vec::with_capacity(n + 1);
        out.extend(x.iter().take(self.origin));
        out.push(0.0);
        out.extend(x.iter().skip(self.origin));
        out
    }
}

type FactorKey = (u64, u64, Vec<u64>);

fn factor_cache() -> &'static Mutex<HashMap<FactorKey, Arc<FbmFactor>>> {
    static CACHE: OnceLock<Mutex<HashMap<FactorKey, Arc<FbmFactor>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Factorization for `(params, nodes)`, computed once per process.
pub fn fbm_factor(params: &FbmParams, nodes: &[Vec<f64>]) -> Result<Arc<FbmFactor>> {
    if nodes.len() > MAX_DENSE_NODES {
        return Err(Error::GridTooLarge { nodes: nodes.len(), limit: MAX_DENSE_NODES });
    }
    let key = (
        params.hurst.to_bits(),
        params.sigma2.to_bits(),
        nodes.iter().flat_map(|t| t.iter().map(|x| x.to_bits())).collect(),
    );
    if let Some(f) = factor_cache().lock().unwrap().get(&key) {
        return Ok(f.clone());
    }
    let f = Arc::new(FbmFactor::build(params, nodes)?);
    factor_cache().lock().unwrap().insert(key, f.clone());
    Ok(f)
}

/// Isotropic fBm field on a planar node set containing the origin.
pub fn fbm_field_2d(params: &FbmParams, grid: &[Vec<f64>], seed: u64) -> Result<GaussianPath> {
    if grid.iter().any(|t| t.len() != 2) {
        return Err(invalid("fBm field nodes must be planar"));
    }
    let values = if params.sigma2 == 0.0 {
        if !grid.iter().any(|t| t.iter().all(|&x| x == 0.0)) {
            return Err(invalid("fBm grid must contain the origin"));
        }
        vec![0.0; grid.len()]
    } else {
        fbm_factor(params, grid)?.draw(&mut rng_from_seed(seed))
    };
    Ok(GaussianPath { grid: grid.to_vec(), values, k: 1, seed })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathKind {
    /// Standard Brownian motion in `R^k` on a 1-D time grid.
    Brownian { k: usize },
    /// Scalar isotropic fBm on a planar grid.
    Fbm(FbmParams),
}

/// Law of a storm path sampled on a fixed node set; used as a mark.
#[derive(Debug, Serialize, Deserialize)]
pub struct StormPathLaw {
    pub kind: PathKind,
    pub nodes: Vec<Vec<f64>>,
    #[serde(skip)]
    factor: OnceLock<Arc<FbmFactor>>,
}

impl PartialEq for StormPathLaw {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.nodes == other.nodes
    }
}

impl StormPathLaw {
    pub fn new(kind: PathKind, nodes: Vec<Vec<f64>>) -> Result<Self> {
        match kind {
            PathKind::Brownian { k } => {
                if k == 0 {
                    return Err(invalid("brownian dimension must be positive"));
                }
                if nodes.iter().any(|t| t.len() != 1) {
                    return Err(invalid("brownian storms live on a 1-D time grid"));
                }
                let times: Vec<f64> = nodes.iter().map(|t| t[0]).collect();
                if times.windows(2).any(|w| !(w[1] > w[0])) || !times.contains(&0.0) {
                    return Err(invalid("brownian times must be strictly increasing and contain 0"));
                }
            }
            PathKind::Fbm(p) => {
                if nodes.iter().any(|t| t.len() != 2) {
                    return Err(invalid("fBm storms live on a planar grid"));
                }
                if !nodes.iter().any(|t| t.iter().all(|&x| x == 0.0)) {
                    return Err(invalid("fBm grid must contain the origin"));
                }
                if p.sigma2 > 0.0 && nodes.len() > MAX_DENSE_NODES {
                    return Err(Error::GridTooLarge { nodes: nodes.len(), limit: MAX_DENSE_NODES });
                }
            }
        }
        Ok(Self { kind, nodes, factor: OnceLock::new() })
    }

    /// Components per node.
    pub fn k(&self) -> usize {
        match self.kind {
            PathKind::Brownian { k } => k,
            PathKind::Fbm(_) => 1,
        }
    }

    pub fn width(&self) -> usize {
        self.nodes.len() * self.k()
    }

    /// Per-coordinate variance of the path at node `j`.
    pub fn variance(&self, j: usize) -> f64 {
        match self.kind {
            PathKind::Brownian { .. } => self.nodes[j][0].abs(),
            PathKind::Fbm(p) => p.variance(&self.nodes[j]),
        }
    }

    pub fn sample(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        match self.kind {
            PathKind::Brownian { k } => {
                let times: Vec<f64> = self.nodes.iter().map(|t| t[0]).collect();
                let mut out = Vec::with_capacity(self.width());
                brownian_values(k, &times, &mut rng, &mut out)?;
                Ok(out)
            }
            PathKind::Fbm(p) => {
                if p.sigma2 == 0.0 {
                    return Ok(vec![0.0; self.nodes.len()]);
                }
                let f = match self.factor.get() {
                    Some(f) => f.clone(),
                    None => {
                        let f = fbm_factor(&p, &self.nodes)?;
                        let _ = self.factor.set(f.clone());
                        f
                    }
                };
                Ok(f.draw(&mut rng))
            }
        }
    }
}
