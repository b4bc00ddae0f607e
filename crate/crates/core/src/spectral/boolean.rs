//! Boolean model with a fixed grain: `S = ∪_i (U_i − A)`, realized through the
//! indicator spectral functions `f_t(u) = 1_A(u − t)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bounding_box, uniform_in_ball, ModelKind, TailMass};
use crate::error::{invalid, Result};
use crate::geometry::{ball_volume, union_volume, volume_outside_box, Shape};
use crate::point_process::{Atom, IntensityMeasure, Window};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::rng::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrainSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Ball of the given radius centred at the origin.
    Disk { radius: f64 },
}

impl GrainSet {
    pub fn measure(&self, dim: usize) -> f64 {
        match self {
            GrainSet::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| u - l).product(),
            GrainSet::Disk { radius } => ball_volume(dim, *radius),
        }
    }

    fn translated(&self, t: &[f64]) -> Shape {
        match self {
            GrainSet::Box { lower, upper } => Shape::Rect {
                lower: lower.iter().zip(t).map(|(l, t)| l + t).collect(),
                upper: upper.iter().zip(t).map(|(u, t)| u + t).collect(),
            },
            GrainSet::Disk { radius } => Shape::Ball { center: t.to_vec(), radius: *radius },
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            GrainSet::Box { lower, upper } => x.iter().enumerate().all(|(i, v)| *v >= lower[i] && *v <= upper[i]),
            GrainSet::Disk { radius } => x.iter().map(|v| v * v).sum::<f64>() <= radius * radius,
        }
    }

    fn bounds(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            GrainSet::Box { lower, upper } => (lower.clone(), upper.clone()),
            GrainSet::Disk { radius } => (vec![-radius; dim], vec![*radius; dim]),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BooleanModel {
    pub grain: GrainSet,
    pub lambda: f64,
    pub dim: usize,
    intensity: IntensityMeasure,
}

impl BooleanModel {
    pub fn new(grain: GrainSet, lambda: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if let GrainSet::Box { lower, upper } = &grain {
            if lower.len() != dim || upper.len() != dim {
                return Err(invalid("box grain dimension does not match the model"));
            }
        }
        let m = grain.measure(dim);
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid(format!("grain measure must be positive and finite, got {m}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        let intensity = IntensityMeasure::lebesgue(lambda, dim)?;
        Ok(Self { grain, lambda, dim, intensity })
    }
}

impl ModelKind for BooleanModel {
    fn name(&self) -> &'static str {
        "boolean_set"
    }

    fn index_dim(&self) -> usize {
        self.dim
    }

    fn intensity(&self) -> &IntensityMeasure {
        &self.intensity
    }

    fn stationary(&self) -> bool {
        true
    }

    fn eval(&self, t: &[f64], atom: &Atom) -> Result<f64> {
        let d: Vec<f64> = atom.location.iter().zip(t).map(|(u, t)| u - t).collect();
        Ok(if self.grain.contains(&d) { 1.0 } else { 0.0 })
    }

    fn shift_atom(&self, s: &[f64], atom: &Atom) -> Option<Atom> {
        Some(Atom::new(atom.location.iter().zip(s).map(|(u, s)| u - s).collect(), atom.mark.clone()))
    }

    fn sup(&self, _t: &[f64]) -> f64 {
        1.0
    }

    fn level_mass(&self, _t: &[f64], a: f64) -> Result<f64> {
        Ok(if a <= 1.0 { self.lambda * self.grain.measure(self.dim) } else { 0.0 })
    }

    fn union_level_mass(&self, ts: &[Vec<f64>], _xs: &[f64], q: &QuadratureSpec) -> Result<Estimate> {
        let shapes: Vec<Shape> = ts.iter().map(|t| self.grain.translated(t)).collect();
        Ok(union_volume(&shapes, q.tolerance, q.mc_samples, q.seed)?.scale(self.lambda))
    }

    fn tail_mass(&self, t: &[f64], _a: f64, window: &Window) -> Result<TailMass> {
        let (v, exact) = volume_outside_box(&self.grain.translated(t), &window.lower, &window.upper, 1e-12)?;
        Ok(TailMass { value: self.lambda * v, exact })
    }

    fn window_for(&self, grid: &[Vec<f64>], margin: f64, _threshold: f64) -> Result<Window> {
        let (lo, hi) = bounding_box(grid);
        let (glo, ghi) = self.grain.bounds(self.dim);
        Window::new(
            (0..self.dim).map(|i| lo[i] + glo[i] - margin).collect(),
            (0..self.dim).map(|i| hi[i] + ghi[i] + margin).collect(),
            vec![],
        )
    }

    fn length_scale(&self) -> f64 {
        let (lo, hi) = self.grain.bounds(self.dim);
        lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max)
    }

    fn level_window(&self, t: &[f64], _a: f64) -> Result<Window> {
        let (glo, ghi) = self.grain.bounds(self.dim);
        Window::new(
            (0..self.dim).map(|i| t[i] + glo[i]).collect(),
            (0..self.dim).map(|i| t[i] + ghi[i] + 1e-12).collect(),
            vec![],
        )
    }

    fn core_level(&self) -> f64 {
        0.5
    }

    fn sample_core(&self, rng: &mut SimRng) -> Result<Atom> {
        let u = match &self.grain {
            GrainSet::Box { lower, upper } => lower.iter().zip(upper).map(|(l, h)| rng.random_range(*l..=*h)).collect(),
            GrainSet::Disk { radius } => uniform_in_ball(self.dim, *radius, rng),
        };
        Ok(Atom::at(u))
    }
}
