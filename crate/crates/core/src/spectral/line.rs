//! Poisson line storms in the plane. A line is parametrized by its signed
//! distance `r` and normal angle `φ ∈ [0, 2π)`; the storm value at `t` is
//! `F(|⟨t, n_φ⟩ − r|)`. The max-stable variant multiplies by a Fréchet mark
//! `z` with intensity `α z^{-α-1} dz`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{ModelKind, StormProfile, TailMass};
use crate::error::{invalid, Error, Result};
use crate::geometry::{union_length, Interval};
use crate::point_process::{Atom, IntensityMeasure, MarkLaw, Window};
use crate::quadrature::{adaptive_simpson, integrate_pieces, Estimate, QuadratureSpec};
use crate::rng::SimRng;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonLine {
    pub storm: StormProfile,
    pub lambda: f64,
    pub alpha: Option<f64>,
    intensity: IntensityMeasure,
    integral_pow: f64,
}

impl PoissonLine {
    pub fn new(storm: StormProfile, lambda: f64, alpha: Option<f64>) -> Result<Self> {
        storm.validate()?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        let mut marks = vec![MarkLaw::Uniform { low: 0.0, high: TWO_PI }];
        let mut integral_pow = 0.0;
        if let Some(alpha) = alpha {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(invalid(format!("alpha must be positive, got {alpha}")));
            }
            integral_pow = storm.integral_pow(alpha)?;
            if !integral_pow.is_finite() {
                return Err(invalid("the storm's alpha-moment integral diverges"));
            }
            marks.push(MarkLaw::Frechet { alpha, floor: 0.0 });
        }
        let intensity = IntensityMeasure::new(lambda, 1, marks)?;
        Ok(Self { storm, lambda, alpha, intensity, integral_pow })
    }

    /// Fréchet scale `σ = (2πλ ∫F^α)^{1/α}` of the max-stable margin.
    pub fn frechet_scale(&self) -> Option<f64> {
        self.alpha.map(|a| (TWO_PI * self.lambda * self.integral_pow).powf(1.0 / a))
    }

    fn projection(t: &[f64], phi: f64) -> f64 {
        t[0] * phi.cos() + t[1] * phi.sin()
    }

    fn z_marks(&self, floor: f64) -> Option<(f64, f64)> {
        self.alpha.map(|a| (a, floor))
    }

    fn floor_of(window: &Window) -> f64 {
        match window.marks.get(1) {
            Some(MarkLaw::Frechet { floor, .. }) => *floor,
            _ => 0.0,
        }
    }

    /// Reach of `F^α` beyond which its integral is negligible.
    fn reach(&self, alpha: f64) -> f64 {
        match self.storm {
            StormProfile::ExpBump { scale, .. } => scale * 60.0 / alpha,
            _ => self.storm.support_radius(),
        }
    }
}

impl ModelKind for PoissonLine {
    fn name(&self) -> &'static str {
        if self.alpha.is_some() {
            "poisson_line_maxstable"
        } else {
            "poisson_line"
        }
    }

    fn index_dim(&self) -> usize {
        2
    }

    fn intensity(&self) -> &IntensityMeasure {
        &self.intensity
    }

    fn stationary(&self) -> bool {
        true
    }

    fn eval(&self, t: &[f64], atom: &Atom) -> Result<f64> {
        let phi = atom.mark[0];
        let v = self.storm.eval((Self::projection(t, phi) - atom.location[0]).abs());
        Ok(if self.alpha.is_some() { v * atom.mark[1] } else { v })
    }

    fn shift_atom(&self, s: &[f64], atom: &Atom) -> Option<Atom> {
        let phi = atom.mark[0];
        Some(Atom::new(vec![atom.location[0] - Self::projection(s, phi)], atom.mark.clone()))
    }

    fn sup(&self, _t: &[f64]) -> f64 {
        if self.alpha.is_some() {
            f64::INFINITY
        } else {
            self.storm.sup()
        }
    }

    fn level_mass(&self, _t: &[f64], a: f64) -> Result<f64> {
        Ok(match self.alpha {
            None => self.lambda * TWO_PI * self.storm.level_volume(a, 1),
            Some(alpha) => self.lambda * TWO_PI * a.powf(-alpha) * self.integral_pow,
        })
    }

    fn union_level_mass(&self, ts: &[Vec<f64>], xs: &[f64], q: &QuadratureSpec) -> Result<Estimate> {
        match self.alpha {
            None => {
                let radii: Vec<f64> = xs.iter().map(|&x| self.storm.level_radius(x).unwrap_or(-1.0)).collect();
                let f = |phi: f64| {
                    let mut ivs: Vec<Interval> = ts
                        .iter()
                        .zip(&radii)
                        .map(|(t, &r)| Interval::centered(Self::projection(t, phi), r))
                        .collect();
                    union_length(&mut ivs)
                };
                Ok(adaptive_simpson(&f, 0.0, TWO_PI, q.tolerance)?.scale(self.lambda))
            }
            Some(alpha) => {
                let reach = self.reach(alpha);
                let inner = |phi: f64| -> Result<f64> {
                    let ps: Vec<f64> = ts.iter().map(|t| Self::projection(t, phi)).collect();
                    let lo = ps.iter().copied().fold(f64::INFINITY, f64::min) - reach;
                    let hi = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max) + reach;
                    let mut breaks = ps.clone();
                    if let StormProfile::Indicator { scale, .. } = self.storm {
                        breaks.extend(ps.iter().flat_map(|p| [p - scale, p + scale]));
                    }
                    let g = |r: f64| {
                        ps.iter()
                            .zip(xs)
                            .map(|(p, x)| (self.storm.eval((p - r).abs()) / x).powf(alpha))
                            .fold(0.0, f64::max)
                    };
                    Ok(integrate_pieces(&g, lo, hi, &breaks, 0.01 * q.tolerance)?.value)
                };
                let failed = std::cell::Cell::new(None);
                let outer = |phi: f64| match inner(phi) {
                    Ok(v) => v,
                    Err(e) => {
                        failed.set(Some(e.to_string()));
                        f64::NAN
                    }
                };
                let res = adaptive_simpson(&outer, 0.0, TWO_PI, q.tolerance);
                if let Some(msg) = failed.take() {
                    return Err(Error::Unsupported(format!("union mass quadrature: {msg}")));
                }
                Ok(res?.scale(self.lambda))
            }
        }
    }

    fn tail_mass(&self, t: &[f64], a: f64, window: &Window) -> Result<TailMass> {
        let (lo, hi) = (window.lower[0], window.upper[0]);
        let exact = std::cell::Cell::new(true);
        let failed = std::cell::Cell::new(false);
        let f = |phi: f64| {
            let p = Self::projection(t, phi);
            match self.alpha {
                None => {
                    let r = self.storm.level_radius(a).unwrap_or(-1.0);
                    Interval::centered(p, r).outside(&Interval::new(lo, hi))
                }
                Some(_) => {
                    let z = self.z_marks(0.0);
                    let part = if p >= lo && p <= hi {
                        self.storm.excess(hi - p, a, z).and_then(|r| Ok(r + self.storm.excess(p - lo, a, z)?))
                    } else {
                        exact.set(false);
                        self.storm.excess(0.0, a, z).map(|v| 2.0 * v)
                    };
                    part.unwrap_or_else(|_| {
                        failed.set(true);
                        0.0
                    })
                }
            }
        };
        let outside = adaptive_simpson(&f, 0.0, TWO_PI, 1e-13)?.value * self.lambda;
        if failed.get() {
            return Err(Error::Quadrature { residual: f64::NAN });
        }
        let mut mass = TailMass { value: outside, exact: exact.get() };
        if let Some(alpha) = self.alpha {
            let floor = Self::floor_of(window);
            let h = self.storm.sup();
            if floor * h > a {
                let inside = self.lambda * TWO_PI * (hi - lo) * ((a / h).powf(-alpha) - floor.powf(-alpha));
                mass = mass.combine(TailMass::bound(inside));
            }
        }
        Ok(mass)
    }

    fn window_for(&self, grid: &[Vec<f64>], margin: f64, threshold: f64) -> Result<Window> {
        let r0 = grid.iter().map(|t| t[0].hypot(t[1])).fold(0.0, f64::max);
        let mut marks = vec![MarkLaw::Uniform { low: 0.0, high: TWO_PI }];
        if let Some(alpha) = self.alpha {
            marks.push(MarkLaw::Frechet { alpha, floor: threshold / self.storm.sup() });
        }
        Window::new(vec![-r0 - margin], vec![r0 + margin], marks)
    }

    fn length_scale(&self) -> f64 {
        self.storm.length_scale()
    }

    fn level_window(&self, t: &[f64], a: f64) -> Result<Window> {
        if self.alpha.is_some() {
            return Err(Error::Unsupported("level sets of the max-stable line model are unbounded in r".into()));
        }
        let r = self.storm.level_radius(a).unwrap_or(0.0);
        if !r.is_finite() {
            return Err(Error::InfiniteMass);
        }
        let reach = t[0].hypot(t[1]) + r.max(1e-12);
        Window::new(vec![-reach], vec![reach], vec![MarkLaw::Uniform { low: 0.0, high: TWO_PI }])
    }

    fn core_level(&self) -> f64 {
        if self.alpha.is_some() {
            self.storm.sup()
        } else {
            0.5 * self.storm.sup()
        }
    }

    fn sample_core(&self, rng: &mut SimRng) -> Result<Atom> {
        let a0 = self.core_level();
        let phi = rng.random_range(0.0..TWO_PI);
        let Some(alpha) = self.alpha else {
            let r = self.storm.level_radius(a0).unwrap_or(0.0);
            return Ok(Atom::new(vec![rng.random_range(-r..=r)], vec![phi]));
        };
        // r has density ∝ F(|r|)^α, then z is Fréchet above a₀ / F(|r|)
        let r = match self.storm {
            StormProfile::ExpBump { scale, .. } => {
                let e = Exp::new(alpha / scale).map_err(|e| invalid(e.to_string()))?.sample(rng);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            }
            StormProfile::Indicator { scale, .. } => rng.random_range(-scale..=scale),
            StormProfile::Table { .. } => {
                let (reach, h) = (self.storm.support_radius(), self.storm.sup());
                loop {
                    let r: f64 = rng.random_range(-reach..=reach);
                    if rng.random::<f64>() * h.powf(alpha) <= self.storm.eval(r.abs()).powf(alpha) {
                        break r;
                    }
                }
            }
        };
        let u: f64 = 1.0 - rng.random::<f64>();
        let z = a0 / self.storm.eval(r.abs()) * u.powf(-1.0 / alpha);
        Ok(Atom::new(vec![r], vec![phi, z]))
    }
}
