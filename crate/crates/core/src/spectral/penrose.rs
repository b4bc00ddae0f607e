//! Penrose fields `X(t) = min_i |U_i + ξ_i(t)|` with `U_i` Poisson in `R^k`
//! and independent Gaussian storm paths `ξ_i`.
//!
//! The generic machinery works with the max-i.d. form
//! `f_t(u, ξ) = exp(−|u + ξ(t)|)`, so that `X(t) = −ln sup_i f_t(U_i, ξ_i)`.
//! Paths are sampled once per atom on a fixed node set; for planar fields the
//! node set may be a coarser sub-lattice of the evaluation grid, in which case
//! each path is bilinearly interpolated.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{uniform_in_ball, ModelKind, Orientation, TailMass};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{norm, FbmParams, PathKind, StormPathLaw};
use crate::geometry::{ball_volume, union_length, Interval};
use crate::point_process::{Atom, IntensityMeasure, MarkLaw, Window};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::stats::{normal_cdf, normal_excess};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenroseStorm {
    /// Brownian motion in `R^k` indexed by time.
    Brownian { k: usize },
    /// Scalar isotropic fBm indexed by the plane. With `stride > 1` the
    /// evaluation grid must be a product lattice through the origin and paths
    /// are sampled on every `stride`-th lattice line.
    Fbm { hurst: f64, sigma2: f64, stride: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Penrose {
    pub storm: PenroseStorm,
    pub lambda: f64,
    pub grid: Vec<Vec<f64>>,
    law: Arc<StormPathLaw>,
    /// Interpolation weights of each grid point over the path nodes.
    weights: Vec<Vec<(usize, f64)>>,
    #[serde(skip)]
    lookup: HashMap<Vec<u64>, usize>,
    intensity: IntensityMeasure,
}

fn key(t: &[f64]) -> Vec<u64> {
    t.iter().map(|x| (x + 0.0).to_bits()).collect()
}

fn axis_values(grid: &[Vec<f64>], axis: usize) -> Vec<f64> {
    let mut v: Vec<f64> = grid.iter().map(|t| t[axis]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Bracketing coarse nodes and weights for `x` on a sorted axis, clamped.
fn bracket(coarse: &[f64], x: f64) -> [(usize, f64); 2] {
    let n = coarse.len();
    if x <= coarse[0] {
        return [(0, 1.0), (0, 0.0)];
    }
    if x >= coarse[n - 1] {
        return [(n - 1, 1.0), (n - 1, 0.0)];
    }
    let i = coarse.partition_point(|&c| c <= x) - 1;
    let w = (x - coarse[i]) / (coarse[i + 1] - coarse[i]);
    [(i, 1.0 - w), (i + 1, w)]
}

impl Penrose {
    pub fn new(storm: PenroseStorm, lambda: f64, grid: &[Vec<f64>]) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if grid.is_empty() {
            return Err(Error::EmptyInput("Penrose fields need a grid".into()));
        }
        let (k, nodes, weights) = match storm {
            PenroseStorm::Brownian { k } => {
                if grid.iter().any(|t| t.len() != 1) {
                    return Err(invalid("Brownian Penrose storms are indexed by time"));
                }
                let mut times = axis_values(grid, 0);
                if !times.contains(&0.0) {
                    times.push(0.0);
                    times.sort_by(f64::total_cmp);
                }
                let weights = grid
                    .iter()
                    .map(|t| vec![(times.iter().position(|&s| s == t[0]).unwrap(), 1.0)])
                    .collect();
                (k, times.into_iter().map(|t| vec![t]).collect::<Vec<_>>(), weights)
            }
            PenroseStorm::Fbm { hurst, sigma2, stride } => {
                FbmParams::new(hurst, if sigma2 == 0.0 { 1.0 } else { sigma2 })?;
                if grid.iter().any(|t| t.len() != 2) {
                    return Err(invalid("fBm Penrose storms are indexed by the plane"));
                }
                if stride <= 1 {
                    let mut nodes = grid.to_vec();
                    if !nodes.iter().any(|t| t[0] == 0.0 && t[1] == 0.0) {
                        nodes.push(vec![0.0, 0.0]);
                    }
                    let weights = (0..grid.len()).map(|i| vec![(i, 1.0)]).collect();
                    (1, nodes, weights)
                } else {
                    let xs = axis_values(grid, 0);
                    let ys = axis_values(grid, 1);
                    if xs.len() * ys.len() != grid.len() {
                        return Err(invalid("a strided fBm grid must be a product lattice"));
                    }
                    let (Some(ix), Some(iy)) = (xs.iter().position(|&x| x == 0.0), ys.iter().position(|&y| y == 0.0)) else {
                        return Err(invalid("a strided fBm grid must contain the origin"));
                    };
                    let pick = |v: &[f64], i0: usize| -> Vec<f64> {
                        v.iter().enumerate().filter(|(i, _)| i.abs_diff(i0) % stride == 0).map(|(_, x)| *x).collect()
                    };
                    let (cx, cy) = (pick(&xs, ix), pick(&ys, iy));
                    let nodes: Vec<Vec<f64>> = cy.iter().flat_map(|&y| cx.iter().map(move |&x| vec![x, y])).collect();
                    let weights = grid
                        .iter()
                        .map(|t| {
                            let bx = bracket(&cx, t[0]);
                            let by = bracket(&cy, t[1]);
                            let mut w = Vec::with_capacity(4);
                            for (j, wy) in by {
                                for (i, wx) in bx {
                                    if wx * wy > 0.0 {
                                        w.push((j * cx.len() + i, wx * wy));
                                    }
                                }
                            }
                            w
                        })
                        .collect();
                    (1, nodes, weights)
                }
            }
        };
        if k == 0 {
            return Err(invalid("storm dimension must be positive"));
        }
        let kind = match storm {
            PenroseStorm::Brownian { k } => PathKind::Brownian { k },
            PenroseStorm::Fbm { hurst, sigma2, .. } => PathKind::Fbm(if sigma2 == 0.0 {
                FbmParams::degenerate(hurst)?
            } else {
                FbmParams::new(hurst, sigma2)?
            }),
        };
        let law = Arc::new(StormPathLaw::new(kind, nodes)?);
        let intensity = IntensityMeasure::new(lambda, k, vec![MarkLaw::StormPath(law.clone())])?;
        let lookup = grid.iter().enumerate().map(|(i, t)| (key(t), i)).collect();
        Ok(Self { storm, lambda, grid: grid.to_vec(), law, weights, lookup, intensity })
    }

    pub fn k(&self) -> usize {
        self.law.k()
    }

    pub fn law(&self) -> &StormPathLaw {
        &self.law
    }

    fn node(&self, t: &[f64]) -> Result<usize> {
        if let Some(&i) = self.lookup.get(&key(t)) {
            return Ok(i);
        }
        // after deserialization the lookup table is empty
        self.grid
            .iter()
            .position(|g| g.as_slice() == t)
            .ok_or_else(|| invalid(format!("{t:?} is not a node of the Penrose grid")))
    }

    /// `ξ(t)` of an atom at grid point `i`, written into `out`.
    fn displacement(&self, i: usize, mark: &[f64], out: &mut [f64]) {
        let k = out.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(l, w) in &self.weights[i] {
            for c in 0..k {
                out[c] += w * mark[l * k + c];
            }
        }
    }

    fn is_direct(&self, i: usize) -> bool {
        self.weights[i].len() == 1 && self.weights[i][0].1 == 1.0
    }

    fn node_sd(&self, i: usize) -> f64 {
        self.weights[i].iter().map(|&(l, w)| w * self.law.variance(l).sqrt()).sum()
    }
}

impl ModelKind for Penrose {
    fn name(&self) -> &'static str {
        "penrose"
    }

    fn index_dim(&self) -> usize {
        self.grid[0].len()
    }

    fn intensity(&self) -> &IntensityMeasure {
        &self.intensity
    }

    fn stationary(&self) -> bool {
        true
    }

    fn orientation(&self) -> Orientation {
        Orientation::Min
    }

    fn eval(&self, t: &[f64], atom: &Atom) -> Result<f64> {
        let i = self.node(t)?;
        let k = self.k();
        let mut xi = [0.0; 8];
        let xi = if k <= 8 { &mut xi[..k] } else { return Err(invalid("storm dimension above 8")) };
        self.displacement(i, &atom.mark, xi);
        let d: f64 = atom.location.iter().zip(xi.iter()).map(|(u, x)| (u + x) * (u + x)).sum::<f64>().sqrt();
        Ok((-d).exp())
    }

    fn sup(&self, _t: &[f64]) -> f64 {
        1.0
    }

    fn level_mass(&self, _t: &[f64], a: f64) -> Result<f64> {
        if a >= 1.0 {
            return Ok(0.0);
        }
        Ok(self.lambda * ball_volume(self.k(), -a.ln()))
    }

    fn union_level_mass(&self, ts: &[Vec<f64>], xs: &[f64], q: &QuadratureSpec) -> Result<Estimate> {
        let idx = ts.iter().map(|t| self.node(t)).collect::<Result<Vec<_>>>()?;
        let radii: Vec<f64> = xs.iter().map(|&x| if x >= 1.0 { 0.0 } else { -x.ln() }).collect();
        let k = self.k();
        let n = q.mc_samples.max(1);
        let mut rng = rng_from_seed(q.seed);
        let (mut sum, mut sum2) = (0.0, 0.0);
        let mut xi = vec![0.0; k];
        for draw in 0..n {
            let path = self.law.sample(derive_seed(q.seed, draw as u64))?;
            let centres: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| {
                    self.displacement(i, &path, &mut xi);
                    xi.iter().map(|v| -v).collect()
                })
                .collect();
            let v = if k == 1 {
                let mut ivs: Vec<Interval> = centres.iter().zip(&radii).map(|(c, &r)| Interval::centered(c[0], r)).collect();
                union_length(&mut ivs)
            } else {
                let rmax = radii.iter().copied().fold(0.0, f64::max);
                let lo: Vec<f64> = (0..k).map(|c| centres.iter().map(|x| x[c]).fold(f64::INFINITY, f64::min) - rmax).collect();
                let hi: Vec<f64> = (0..k).map(|c| centres.iter().map(|x| x[c]).fold(f64::NEG_INFINITY, f64::max) + rmax).collect();
                let u: Vec<f64> = (0..k).map(|c| rng.random_range(lo[c]..=hi[c])).collect();
                let hit = centres.iter().zip(&radii).any(|(c, &r)| {
                    let d: Vec<f64> = c.iter().zip(&u).map(|(a, b)| a - b).collect();
                    norm(&d) <= r
                });
                if hit {
                    (0..k).map(|c| hi[c] - lo[c]).product()
                } else {
                    0.0
                }
            };
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum2 / n as f64 - mean * mean).max(0.0);
        Ok(Estimate::new(mean, (var / n as f64).sqrt()).scale(self.lambda))
    }

    fn tail_mass(&self, t: &[f64], a: f64, window: &Window) -> Result<TailMass> {
        let i = self.node(t)?;
        let r = -a.ln();
        let k = self.k();
        let sd = self.node_sd(i);
        if k == 1 && self.is_direct(i) {
            let (lo, hi) = (window.lower[0], window.upper[0]);
            let right = normal_excess(sd, hi - r) - normal_excess(sd, hi + r);
            let left = normal_excess(sd, -lo - r) - normal_excess(sd, -lo + r);
            return Ok(TailMass::exact(self.lambda * (right + left).max(0.0)));
        }
        let tail = |c: f64| if sd == 0.0 { if c < 0.0 { 1.0 } else { 0.0 } } else { 1.0 - normal_cdf(c / sd) };
        let p: f64 = (0..k).map(|c| tail(window.upper[c] - r) + tail(r - window.lower[c])).sum();
        Ok(TailMass::bound(self.lambda * ball_volume(k, r) * p.min(1.0)))
    }

    fn window_for(&self, _grid: &[Vec<f64>], margin: f64, _threshold: f64) -> Result<Window> {
        let k = self.k();
        Window::new(vec![-margin; k], vec![margin; k], vec![MarkLaw::StormPath(self.law.clone())])
    }

    fn length_scale(&self) -> f64 {
        1.0
    }

    fn level_window(&self, _t: &[f64], _a: f64) -> Result<Window> {
        Err(Error::Unsupported("Penrose level sets are unbounded in the location coordinate".into()))
    }

    fn core_level(&self) -> f64 {
        0.5
    }

    fn sample_core(&self, rng: &mut SimRng) -> Result<Atom> {
        let u = uniform_in_ball(self.k(), 2f64.ln(), rng);
        let path = self.law.sample(rng.random())?;
        Ok(Atom::new(u, path))
    }
}
