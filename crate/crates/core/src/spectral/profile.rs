//! Radial storm profiles `F(|τ|)` with closed-form level sets.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::unit_ball_volume;
use crate::quadrature::{adaptive_simpson, integrate_pieces};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum StormProfile {
    /// `F(τ) = h e^{-|τ|/s}`.
    ExpBump { height: f64, scale: f64 },
    /// `F(τ) = h 1{|τ| ≤ s}`.
    Indicator { height: f64, scale: f64 },
    /// Piecewise-linear nonincreasing profile through `(radii[i], values[i])`,
    /// zero beyond the last radius.
    Table { radii: Vec<f64>, values: Vec<f64> },
}

impl StormProfile {
    pub fn exp_bump(height: f64, scale: f64) -> Result<Self> {
        let p = StormProfile::ExpBump { height, scale };
        p.validate()?;
        Ok(p)
    }

    pub fn indicator(height: f64, scale: f64) -> Result<Self> {
        let p = StormProfile::Indicator { height, scale };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StormProfile::ExpBump { height, scale } | StormProfile::Indicator { height, scale } => {
                if !(*height > 0.0 && height.is_finite() && *scale > 0.0 && scale.is_finite()) {
                    return Err(invalid(format!("storm height and scale must be positive, got {height}, {scale}")));
                }
            }
            StormProfile::Table { radii, values } => {
                if radii.len() != values.len() || radii.len() < 2 {
                    return Err(invalid("storm table needs matching radii and values with at least two rows"));
                }
                if radii[0] != 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("storm table radii must start at 0 and increase"));
                }
                if values.windows(2).any(|w| w[1] > w[0]) || values.iter().any(|v| !(*v >= 0.0)) || !(values[0] > 0.0) {
                    return Err(invalid("storm table values must be nonnegative, nonincreasing and positive at 0"));
                }
            }
        }
        Ok(())
    }

    /// `F` at radius `r ≥ 0`.
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            StormProfile::ExpBump { height, scale } => height * (-r / scale).exp(),
            StormProfile::Indicator { height, scale } => {
                if r <= *scale {
                    *height
                } else {
                    0.0
                }
            }
            StormProfile::Table { radii, values } => {
                let n = radii.len();
                if r >= radii[n - 1] {
                    return if r == radii[n - 1] { values[n - 1] } else { 0.0 };
                }
                let i = radii.partition_point(|&x| x <= r) - 1;
                let w = (r - radii[i]) / (radii[i + 1] - radii[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            StormProfile::ExpBump { height, .. } | StormProfile::Indicator { height, .. } => *height,
            StormProfile::Table { values, .. } => values[0],
        }
    }

    /// Radius of the level set `{F ≥ a}`, or `None` when it is empty.
    /// Infinite for `a ≤ 0` on profiles with unbounded support.
    pub fn level_radius(&self, a: f64) -> Option<f64> {
        if a > self.sup() {
            return None;
        }
        match self {
            StormProfile::ExpBump { height, scale } => {
                if a <= 0.0 {
                    Some(f64::INFINITY)
                } else {
                    Some(scale * (height / a).ln())
                }
            }
            StormProfile::Indicator { scale, .. } => Some(*scale),
            StormProfile::Table { radii, values } => {
                let n = radii.len();
                if a <= values[n - 1] {
                    return Some(radii[n - 1]);
                }
                // last node with value ≥ a, then interpolate into the next segment
                let i = values.iter().rposition(|&v| v >= a).unwrap();
                let (v0, v1) = (values[i], values[i + 1]);
                Some(radii[i] + (v0 - a) / (v0 - v1) * (radii[i + 1] - radii[i]))
            }
        }
    }

    /// Radius beyond which `F` vanishes, infinite for unbounded support.
    pub fn support_radius(&self) -> f64 {
        match self {
            StormProfile::ExpBump { .. } => f64::INFINITY,
            StormProfile::Indicator { scale, .. } => *scale,
            StormProfile::Table { radii, .. } => *radii.last().unwrap(),
        }
    }

    /// A length over which the profile decays appreciably.
    pub fn length_scale(&self) -> f64 {
        match self {
            StormProfile::ExpBump { scale, .. } | StormProfile::Indicator { scale, .. } => *scale,
            StormProfile::Table { radii, .. } => *radii.last().unwrap(),
        }
    }

    /// Lebesgue content of `{τ ∈ R^d : F(|τ|) ≥ a}`.
    pub fn level_volume(&self, a: f64, d: usize) -> f64 {
        match self.level_radius(a) {
            None => 0.0,
            Some(r) => unit_ball_volume(d) * r.powi(d as i32),
        }
    }

    /// `∫_R F(|τ|)^α dτ`.
    pub fn integral_pow(&self, alpha: f64) -> Result<f64> {
        match self {
            StormProfile::ExpBump { height, scale } => Ok(2.0 * height.powf(alpha) * scale / alpha),
            StormProfile::Indicator { height, scale } => Ok(2.0 * height.powf(alpha) * scale),
            StormProfile::Table { radii, .. } => {
                let mut total = 0.0;
                for w in radii.windows(2) {
                    total += adaptive_simpson(&|r: f64| self.eval(r).powf(alpha), w[0], w[1], 1e-12)?.value;
                }
                Ok(2.0 * total)
            }
        }
    }

    /// `∫ (ℓ(a/z) − c)_+ ν(dz)` where `ℓ` is the level radius and `ν` is
    /// `α z^{-α-1} dz` on `[floor, ∞)`; without marks, `(ℓ(a) − c)_+`.
    pub fn excess(&self, c: f64, a: f64, marks: Option<(f64, f64)>) -> Result<f64> {
        let c = c.max(0.0);
        let Some((alpha, floor)) = marks else {
            return Ok(self.level_radius(a).map_or(0.0, |r| (r - c).max(0.0)));
        };
        match self {
            StormProfile::ExpBump { height, scale } => {
                let z1 = floor.max(a / height * (c / scale).exp());
                Ok(z1.powf(-alpha) * (scale * (height * z1 / a).ln() - c + scale / alpha))
            }
            StormProfile::Indicator { height, scale } => {
                if *scale <= c {
                    Ok(0.0)
                } else {
                    Ok(floor.max(a / height).powf(-alpha) * (scale - c))
                }
            }
            StormProfile::Table { values, .. } => {
                // substitute w = z^{-α}; the integrand is positive exactly on w < (F(c)/a)^α
                let w_floor = if floor > 0.0 { floor.powf(-alpha) } else { f64::INFINITY };
                let w_max = w_floor.min((self.eval(c) / a).powf(alpha));
                if !(w_max > 0.0) {
                    return Ok(0.0);
                }
                let g = |w: f64| {
                    if w <= 0.0 {
                        return (self.support_radius() - c).max(0.0);
                    }
                    self.level_radius(a * w.powf(1.0 / alpha)).map_or(0.0, |r| (r - c).max(0.0))
                };
                let knots: Vec<f64> = values.iter().map(|v| (v / a).powf(alpha)).filter(|w| *w > 0.0 && *w < w_max).collect();
                Ok(integrate_pieces(&g, 0.0, w_max, &knots, 1e-12 * (1.0 + w_max))?.value)
            }
        }
    }
}
