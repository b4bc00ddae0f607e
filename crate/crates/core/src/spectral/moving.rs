//! Mixed moving maxima `X(t) = sup_i F(t − U_i)` with a deterministic radial
//! storm and storm centres from a homogeneous Poisson process on `R^d`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bounding_box, uniform_in_ball, ModelKind, StormProfile, TailMass};
use crate::error::{invalid, Result};
use crate::gaussian::norm;
use crate::geometry::{union_volume, volume_outside_box, Shape};
use crate::point_process::{Atom, IntensityMeasure, Window};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::rng::SimRng;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MovingMaxima {
    pub storm: StormProfile,
    pub lambda: f64,
    pub dim: usize,
    intensity: IntensityMeasure,
}

impl MovingMaxima {
    pub fn new(storm: StormProfile, lambda: f64, dim: usize) -> Result<Self> {
        storm.validate()?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let intensity = IntensityMeasure::lebesgue(lambda, dim)?;
        Ok(Self { storm, lambda, dim, intensity })
    }

    fn distance(t: &[f64], u: &[f64]) -> f64 {
        if t.len() == 1 {
            (t[0] - u[0]).abs()
        } else {
            t.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        }
    }
}

impl ModelKind for MovingMaxima {
    fn name(&self) -> &'static str {
        "moving_maxima"
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
        Ok(self.storm.eval(Self::distance(t, &atom.location)))
    }

    fn shift_atom(&self, s: &[f64], atom: &Atom) -> Option<Atom> {
        Some(Atom::new(atom.location.iter().zip(s).map(|(u, s)| u - s).collect(), atom.mark.clone()))
    }

    fn sup(&self, _t: &[f64]) -> f64 {
        self.storm.sup()
    }

    fn level_mass(&self, _t: &[f64], a: f64) -> Result<f64> {
        Ok(self.lambda * self.storm.level_volume(a, self.dim))
    }

    fn union_level_mass(&self, ts: &[Vec<f64>], xs: &[f64], q: &QuadratureSpec) -> Result<Estimate> {
        let shapes: Vec<Shape> = ts
            .iter()
            .zip(xs)
            .filter_map(|(t, &x)| self.storm.level_radius(x).map(|r| Shape::Ball { center: t.clone(), radius: r }))
            .collect();
        Ok(union_volume(&shapes, q.tolerance, q.mc_samples, q.seed)?.scale(self.lambda))
    }

    fn tail_mass(&self, t: &[f64], a: f64, window: &Window) -> Result<TailMass> {
        let Some(r) = self.storm.level_radius(a) else {
            return Ok(TailMass::exact(0.0));
        };
        let shape = Shape::Ball { center: t.to_vec(), radius: r };
        let (v, exact) = volume_outside_box(&shape, &window.lower, &window.upper, 1e-12)?;
        Ok(TailMass { value: self.lambda * v, exact })
    }

    fn window_for(&self, grid: &[Vec<f64>], margin: f64, _threshold: f64) -> Result<Window> {
        let (lo, hi) = bounding_box(grid);
        Window::new(lo.iter().map(|x| x - margin).collect(), hi.iter().map(|x| x + margin).collect(), vec![])
    }

    fn length_scale(&self) -> f64 {
        self.storm.length_scale()
    }

    fn level_window(&self, t: &[f64], a: f64) -> Result<Window> {
        let r = self.storm.level_radius(a).unwrap_or(0.0).max(1e-12);
        if !r.is_finite() {
            return Err(crate::error::Error::InfiniteMass);
        }
        Window::new(t.iter().map(|x| x - r).collect(), t.iter().map(|x| x + r).collect(), vec![])
    }

    fn core_level(&self) -> f64 {
        0.5 * self.storm.sup()
    }

    fn sample_core(&self, rng: &mut SimRng) -> Result<Atom> {
        let r = self.storm.level_radius(self.core_level()).unwrap_or(0.0);
        let u = if self.dim == 1 {
            vec![rng.random_range(-r..=r)]
        } else {
            uniform_in_ball(self.dim, r, rng)
        };
        debug_assert!(norm(&u) <= r);
        Ok(Atom::at(u))
    }
}
