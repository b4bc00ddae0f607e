//! Max-stable lift of a finite family `g_t ≥ 0` on a finite base space:
//! `μ = α u^{-α-1} du μ′` and `f_t(u, ω′) = u g_t(ω′)`.
//!
//! The base space is a list of cells with masses `μ′_k`, laid out as
//! consecutive intervals of `[0, Σ μ′_k)`.

use serde::{Deserialize, Serialize};

use super::{label, ModelKind, TailMass};
use crate::error::{invalid, Error, Result};
use crate::geometry::Interval;
use crate::point_process::{Atom, IntensityMeasure, MarkLaw, Window};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::rng::SimRng;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrechetLift {
    pub alpha: f64,
    pub masses: Vec<f64>,
    /// `g[t][k]`: value of `g_t` on cell `k`.
    pub g: Vec<Vec<f64>>,
    edges: Vec<f64>,
    intensity: IntensityMeasure,
}

impl FrechetLift {
    pub fn new(masses: Vec<f64>, g: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        if masses.is_empty() || masses.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(invalid("base cell masses must be positive and finite"));
        }
        if g.is_empty() || g.iter().any(|row| row.len() != masses.len()) {
            return Err(invalid("each base function needs one value per cell"));
        }
        if g.iter().flatten().any(|v| !(*v >= 0.0)) {
            return Err(invalid("base functions must be nonnegative"));
        }
        for (t, row) in g.iter().enumerate() {
            let m: f64 = row.iter().zip(&masses).map(|(v, m)| m * v.powf(alpha)).sum();
            if !m.is_finite() {
                return Err(invalid(format!("alpha-moment of g_{t} diverges")));
            }
        }
        let mut edges = vec![0.0];
        for m in &masses {
            edges.push(edges.last().unwrap() + m);
        }
        let intensity = IntensityMeasure::new(1.0, 1, vec![MarkLaw::Frechet { alpha, floor: 0.0 }])?;
        Ok(Self { alpha, masses, g, edges, intensity })
    }

    /// Margin scale `σ(t) = (∫ g_t^α dμ′)^{1/α}`.
    pub fn scale(&self, t: usize) -> f64 {
        let s: f64 = self.g[t].iter().zip(&self.masses).map(|(v, m)| m * v.powf(self.alpha)).sum();
        s.powf(1.0 / self.alpha)
    }

    fn cell(&self, s: f64) -> Option<usize> {
        if s < 0.0 || s >= *self.edges.last().unwrap() {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= s) - 1)
    }

    fn gmax(&self) -> f64 {
        self.g.iter().flatten().copied().fold(0.0, f64::max)
    }

    fn total(&self) -> f64 {
        *self.edges.last().unwrap()
    }
}

impl ModelKind for FrechetLift {
    fn name(&self) -> &'static str {
        "frechet_lift"
    }

    fn index_dim(&self) -> usize {
        1
    }

    fn intensity(&self) -> &IntensityMeasure {
        &self.intensity
    }

    fn stationary(&self) -> bool {
        false
    }

    fn eval(&self, t: &[f64], atom: &Atom) -> Result<f64> {
        let j = label(t, self.g.len())?;
        Ok(self.cell(atom.location[0]).map_or(0.0, |k| atom.mark[0] * self.g[j][k]))
    }

    fn sup(&self, _t: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn level_mass(&self, t: &[f64], a: f64) -> Result<f64> {
        let j = label(t, self.g.len())?;
        Ok(self.scale(j).powf(self.alpha) * a.powf(-self.alpha))
    }

    fn union_level_mass(&self, ts: &[Vec<f64>], xs: &[f64], _q: &QuadratureSpec) -> Result<Estimate> {
        let js = ts.iter().map(|t| label(t, self.g.len())).collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for (k, m) in self.masses.iter().enumerate() {
            let best = js.iter().zip(xs).map(|(&j, x)| self.g[j][k] / x).fold(0.0, f64::max);
            total += m * best.powf(self.alpha);
        }
        Ok(Estimate::exact(total))
    }

    fn tail_mass(&self, t: &[f64], a: f64, window: &Window) -> Result<TailMass> {
        let j = label(t, self.g.len())?;
        let floor = match window.marks.first() {
            Some(MarkLaw::Frechet { floor, .. }) => *floor,
            _ => 0.0,
        };
        let w = Interval::new(window.lower[0], window.upper[0]);
        let mut total = 0.0;
        for k in 0..self.masses.len() {
            let cell = Interval::new(self.edges[k], self.edges[k + 1]);
            let inside = cell.overlap(&w);
            let level = (self.g[j][k] / a).powf(self.alpha);
            total += (cell.len() - inside) * level;
            total += inside * (level - floor.powf(-self.alpha)).max(0.0);
        }
        Ok(TailMass::exact(total))
    }

    fn window_for(&self, _grid: &[Vec<f64>], _margin: f64, threshold: f64) -> Result<Window> {
        Window::new(
            vec![0.0],
            vec![self.total()],
            vec![MarkLaw::Frechet { alpha: self.alpha, floor: threshold / self.gmax() }],
        )
    }

    fn length_scale(&self) -> f64 {
        self.total()
    }

    fn level_window(&self, _t: &[f64], a: f64) -> Result<Window> {
        self.window_for(&[], 0.0, a)
    }

    fn core_level(&self) -> f64 {
        f64::NAN
    }

    fn sample_core(&self, _rng: &mut SimRng) -> Result<Atom> {
        Err(Error::Unsupported("the Fréchet lift carries no flow".into()))
    }
}
