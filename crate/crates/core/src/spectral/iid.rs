//! Independent max-i.d. values on a finite index set: atoms `(s, x)` with
//! `s ∈ [0, n)` and `μ({t} × [x, ∞)) = −ln P[X(t) < x]`, and
//! `f_t(s, x) = x 1{⌊s⌋ = t}`.

use serde::{Deserialize, Serialize};

use super::{label, ModelKind, TailMass};
use crate::error::{invalid, Error, Result};
use crate::geometry::Interval;
use crate::point_process::{Atom, CdfTable, IntensityMeasure, MarkLaw, Window};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::rng::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Marginal {
    /// `exp(−(scale/x)^α)`.
    Frechet { alpha: f64, scale: f64 },
    Table(CdfTable),
}

impl Marginal {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Frechet { alpha, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-(scale / x).powf(*alpha)).exp()
                }
            }
            Marginal::Table(t) => t.cdf(x),
        }
    }

    /// `−ln F(x)`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        match self {
            Marginal::Frechet { alpha, scale } => (scale / x).powf(*alpha),
            Marginal::Table(t) => t.tail_mass(x),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IidModel {
    pub marginal: Marginal,
    pub indices: usize,
    intensity: IntensityMeasure,
}

impl IidModel {
    pub fn new(marginal: Marginal, indices: usize) -> Result<Self> {
        if indices == 0 {
            return Err(invalid("index set is empty"));
        }
        let intensity = match &marginal {
            Marginal::Frechet { alpha, scale } => {
                if !(*alpha > 0.0 && *scale > 0.0) {
                    return Err(invalid("Fréchet marginal needs positive alpha and scale"));
                }
                IntensityMeasure::new(scale.powf(*alpha), 1, vec![MarkLaw::Frechet { alpha: *alpha, floor: 0.0 }])?
            }
            Marginal::Table(t) => {
                let t = CdfTable::new(t.x.clone(), t.f.clone())?;
                IntensityMeasure::new(1.0, 1, vec![MarkLaw::CdfTail { table: t, floor: 0.0 }])?
            }
        };
        Ok(Self { marginal, indices, intensity })
    }

    fn floor_of(window: &Window) -> f64 {
        match window.marks.first() {
            Some(MarkLaw::Frechet { floor, .. }) | Some(MarkLaw::CdfTail { floor, .. }) => *floor,
            _ => 0.0,
        }
    }

    fn mark_law(&self, floor: f64) -> MarkLaw {
        match &self.marginal {
            Marginal::Frechet { alpha, .. } => MarkLaw::Frechet { alpha: *alpha, floor },
            Marginal::Table(t) => MarkLaw::CdfTail { table: t.clone(), floor },
        }
    }
}

impl ModelKind for IidModel {
    fn name(&self) -> &'static str {
        "iid"
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
        let j = label(t, self.indices)?;
        Ok(if atom.location[0].floor() as usize == j && atom.location[0] >= 0.0 { atom.mark[0] } else { 0.0 })
    }

    fn sup(&self, _t: &[f64]) -> f64 {
        match &self.marginal {
            Marginal::Frechet { .. } => f64::INFINITY,
            Marginal::Table(t) => t.sup(),
        }
    }

    fn level_mass(&self, t: &[f64], a: f64) -> Result<f64> {
        label(t, self.indices)?;
        Ok(self.marginal.tail_mass(a))
    }

    fn union_level_mass(&self, ts: &[Vec<f64>], xs: &[f64], _q: &QuadratureSpec) -> Result<Estimate> {
        let mut lowest = vec![f64::INFINITY; self.indices];
        for (t, &x) in ts.iter().zip(xs) {
            let j = label(t, self.indices)?;
            lowest[j] = lowest[j].min(x);
        }
        Ok(Estimate::exact(lowest.iter().filter(|x| x.is_finite()).map(|&x| self.marginal.tail_mass(x)).sum()))
    }

    fn tail_mass(&self, t: &[f64], a: f64, window: &Window) -> Result<TailMass> {
        let j = label(t, self.indices)?;
        let cell = Interval::new(j as f64, j as f64 + 1.0);
        let inside = cell.overlap(&Interval::new(window.lower[0], window.upper[0]));
        let floor = Self::floor_of(window);
        let m = self.marginal.tail_mass(a);
        let below_floor = if floor > a { m - self.marginal.tail_mass(floor) } else { 0.0 };
        Ok(TailMass::exact((1.0 - inside) * m + inside * below_floor))
    }

    fn window_for(&self, _grid: &[Vec<f64>], _margin: f64, threshold: f64) -> Result<Window> {
        Window::new(vec![0.0], vec![self.indices as f64], vec![self.mark_law(threshold)])
    }

    fn length_scale(&self) -> f64 {
        1.0
    }

    fn level_window(&self, t: &[f64], a: f64) -> Result<Window> {
        let j = label(t, self.indices)? as f64;
        Window::new(vec![j], vec![j + 1.0], vec![self.mark_law(a)])
    }

    fn core_level(&self) -> f64 {
        f64::NAN
    }

    fn sample_core(&self, _rng: &mut SimRng) -> Result<Atom> {
        Err(Error::Unsupported("the i.i.d. model has no flow".into()))
    }
}
