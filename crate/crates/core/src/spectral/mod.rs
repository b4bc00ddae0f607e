//! The model zoo. Each model is a family of spectral functions `f_t` on a
//! product space `R^d × marks`, together with its intensity measure, mass
//! oracles for level sets and the tail masses that drive truncation.

mod boolean;
mod iid;
mod lift;
mod line;
mod moving;
mod penrose;
mod profile;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use boolean::{BooleanModel, GrainSet};
pub use iid::{IidModel, Marginal};
pub use lift::FrechetLift;
pub use line::PoissonLine;
pub use moving::MovingMaxima;
pub use penrose::{Penrose, PenroseStorm};
pub use profile::StormProfile;

use crate::error::{invalid, Error, Result};
use crate::point_process::{Atom, IntensityMeasure, Window};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::rng::SimRng;

/// Whether the generic (max-i.d.) machinery sees the field itself or its
/// transform. Min-i.d. fields are exposed through a decreasing map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Max,
    Min,
}

/// `μ((window complement) ∩ {f_t ≥ a})`, flagged when only an upper bound is
/// available.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailMass {
    pub value: f64,
    pub exact: bool,
}

impl TailMass {
    pub fn exact(value: f64) -> Self {
        Self { value, exact: true }
    }

    pub fn bound(value: f64) -> Self {
        Self { value, exact: false }
    }

    pub fn combine(self, other: TailMass) -> Self {
        Self { value: self.value + other.value, exact: self.exact && other.exact }
    }
}

/// Simulation window for a grid, with the threshold it was certified at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub window: Window,
    /// The budget-quantile `a*` of the margin.
    pub threshold: f64,
    /// `Σ_t (1 − exp(−tail_mass(t, a*, window)))`.
    pub certificate: f64,
    pub exact: bool,
    pub budget: f64,
}

/// Behaviour shared by all kinds.
pub trait ModelKind: Send + Sync {
    fn name(&self) -> &'static str;
    fn index_dim(&self) -> usize;
    fn intensity(&self) -> &IntensityMeasure;
    fn stationary(&self) -> bool;
    fn orientation(&self) -> Orientation {
        Orientation::Max
    }
    fn eval(&self, t: &[f64], atom: &Atom) -> Result<f64>;
    /// The flow action `T_s` on atoms, when the model is stationary.
    fn shift_atom(&self, _s: &[f64], _atom: &Atom) -> Option<Atom> {
        None
    }
    /// `sup_ω f_t(ω)`, possibly infinite.
    fn sup(&self, t: &[f64]) -> f64;
    /// `μ{f_t ≥ a}` for `a > 0`.
    fn level_mass(&self, t: &[f64], a: f64) -> Result<f64>;
    /// `μ(∪_j {f_{t_j} ≥ x_j})` for positive thresholds.
    fn union_level_mass(&self, ts: &[Vec<f64>], xs: &[f64], q: &QuadratureSpec) -> Result<Estimate>;
    fn tail_mass(&self, t: &[f64], a: f64, window: &Window) -> Result<TailMass>;
    /// Window covering the grid enlarged by `margin`, with mark ranges cut at
    /// the level needed to resolve values `≥ threshold`.
    fn window_for(&self, grid: &[Vec<f64>], margin: f64, threshold: f64) -> Result<Window>;
    /// A typical length for the margin search.
    fn length_scale(&self) -> f64;
    /// A window containing `{f_t > a}`.
    fn level_window(&self, t: &[f64], a: f64) -> Result<Window>;
    /// The level `a₀` of the finite-mass core `{f_0 ≥ a₀}`.
    fn core_level(&self) -> f64;
    /// A draw from `μ` restricted to `{f_0 ≥ a₀}` and normalized.
    fn sample_core(&self, rng: &mut SimRng) -> Result<Atom>;
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralModel {
    Iid(IidModel),
    MovingMaxima(MovingMaxima),
    PoissonLine(PoissonLine),
    PoissonLineMaxstable(PoissonLine),
    Penrose(Penrose),
    BooleanSet(BooleanModel),
    FrechetLift(FrechetLift),
}

impl SpectralModel {
    pub fn kind(&self) -> &dyn ModelKind {
        match self {
            SpectralModel::Iid(m) => m,
            SpectralModel::MovingMaxima(m) => m,
            SpectralModel::PoissonLine(m) | SpectralModel::PoissonLineMaxstable(m) => m,
            SpectralModel::Penrose(m) => m,
            SpectralModel::BooleanSet(m) => m,
            SpectralModel::FrechetLift(m) => m,
        }
    }

    pub fn make_iid(marginal: Marginal, indices: usize) -> Result<Self> {
        Ok(SpectralModel::Iid(IidModel::new(marginal, indices)?))
    }

    pub fn make_moving_maxima(storm: StormProfile, lambda: f64, dim: usize) -> Result<Self> {
        Ok(SpectralModel::MovingMaxima(MovingMaxima::new(storm, lambda, dim)?))
    }

    pub fn make_poisson_line(storm: StormProfile, lambda: f64) -> Result<Self> {
        Ok(SpectralModel::PoissonLine(PoissonLine::new(storm, lambda, None)?))
    }

    pub fn make_poisson_line_maxstable(storm: StormProfile, lambda: f64, alpha: f64) -> Result<Self> {
        Ok(SpectralModel::PoissonLineMaxstable(PoissonLine::new(storm, lambda, Some(alpha))?))
    }

    pub fn make_penrose(storm: PenroseStorm, lambda: f64, grid: &[Vec<f64>]) -> Result<Self> {
        Ok(SpectralModel::Penrose(Penrose::new(storm, lambda, grid)?))
    }

    pub fn make_boolean(grain: GrainSet, lambda: f64, dim: usize) -> Result<Self> {
        Ok(SpectralModel::BooleanSet(BooleanModel::new(grain, lambda, dim)?))
    }

    pub fn make_frechet_lift(masses: Vec<f64>, g: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        Ok(SpectralModel::FrechetLift(FrechetLift::new(masses, g, alpha)?))
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn index_dim(&self) -> usize {
        self.kind().index_dim()
    }

    pub fn intensity(&self) -> &IntensityMeasure {
        self.kind().intensity()
    }

    pub fn stationary(&self) -> bool {
        self.kind().stationary()
    }

    pub fn orientation(&self) -> Orientation {
        self.kind().orientation()
    }

    pub fn eval(&self, t: &[f64], atom: &Atom) -> Result<f64> {
        self.kind().eval(t, atom)
    }

    pub fn shift_atom(&self, s: &[f64], atom: &Atom) -> Option<Atom> {
        self.kind().shift_atom(s, atom)
    }

    pub fn sup(&self, t: &[f64]) -> f64 {
        self.kind().sup(t)
    }

    pub fn level_mass(&self, t: &[f64], a: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(invalid(format!("level must be positive, got {a}")));
        }
        self.kind().level_mass(t, a)
    }

    pub fn union_level_mass(&self, ts: &[Vec<f64>], xs: &[f64], q: &QuadratureSpec) -> Result<Estimate> {
        if ts.len() != xs.len() {
            return Err(invalid("points and thresholds differ in length"));
        }
        if xs.iter().any(|x| !(*x > 0.0)) {
            return Err(invalid("union masses need positive thresholds"));
        }
        let sup_ok: Vec<usize> = (0..ts.len()).filter(|&j| xs[j] <= self.sup(&ts[j])).collect();
        if sup_ok.is_empty() {
            return Ok(Estimate::exact(0.0));
        }
        if sup_ok.len() == 1 {
            let j = sup_ok[0];
            return Ok(Estimate::exact(self.level_mass(&ts[j], xs[j])?));
        }
        let ts: Vec<Vec<f64>> = sup_ok.iter().map(|&j| ts[j].clone()).collect();
        let xs: Vec<f64> = sup_ok.iter().map(|&j| xs[j]).collect();
        self.kind().union_level_mass(&ts, &xs, q)
    }

    pub fn tail_mass(&self, t: &[f64], a: f64, window: &Window) -> Result<TailMass> {
        if !(a > 0.0) {
            return Err(invalid(format!("tail threshold must be positive, got {a}")));
        }
        if a > self.sup(t) {
            return Ok(TailMass::exact(0.0));
        }
        self.kind().tail_mass(t, a, window)
    }

    pub fn level_window(&self, t: &[f64], a: f64) -> Result<Window> {
        self.kind().level_window(t, a)
    }

    pub fn core_level(&self) -> f64 {
        self.kind().core_level()
    }

    pub fn sample_core(&self, rng: &mut SimRng) -> Result<Atom> {
        self.kind().sample_core(rng)
    }

    /// The `β`-quantile of the margin at `t`: the largest `a` with
    /// `μ{f_t ≥ a} ≥ −ln β`, or a vanishing level when the margin has an
    /// atom at zero heavier than `β`.
    pub fn margin_quantile(&self, t: &[f64], beta: f64) -> Result<f64> {
        let target = -beta.ln();
        let tiny = 1e-300;
        if self.level_mass(t, tiny)? < target {
            return Ok(tiny);
        }
        let sup = self.sup(t);
        let (mut lo, mut hi) = (tiny.ln(), if sup.is_finite() { sup.ln() } else { 700.0 });
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.level_mass(t, mid.exp())? >= target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        Ok(lo.exp())
    }

    /// Sum over grid points of `1 − exp(−tail_mass(t, a, window))`.
    pub fn grid_certificate(&self, grid: &[Vec<f64>], a: f64, window: &Window) -> Result<(f64, bool)> {
        let mut total = 0.0;
        let mut exact = true;
        for t in grid {
            let m = self.tail_mass(t, a, window)?;
            total += -(-m.value).exp_m1();
            exact &= m.exact;
        }
        Ok((total, exact))
    }

    /// Chooses the smallest window (over a one-parameter family of enlarged
    /// boxes) whose grid certificate at the budget-quantile threshold stays
    /// below `budget`.
    pub fn truncation_plan(&self, grid: &[Vec<f64>], budget: f64) -> Result<TruncationPlan> {
        /// Largest admissible expected atom count.
        const MAX_MASS: f64 = 2e7;
        if !(budget > 0.0 && budget < 1.0) {
            return Err(invalid(format!("error budget must lie in (0, 1), got {budget}")));
        }
        if grid.is_empty() {
            return Err(Error::EmptyInput("grid has no points".into()));
        }
        if grid.iter().any(|t| t.len() != self.index_dim()) {
            return Err(invalid(format!("grid points must have dimension {}", self.index_dim())));
        }
        let threshold = if self.stationary() {
            self.margin_quantile(&grid[0], budget)?
        } else {
            let mut m = f64::INFINITY;
            for t in grid {
                m = m.min(self.margin_quantile(t, budget)?);
            }
            m
        };
        let evaluate = |margin: f64| -> Result<Option<(Window, f64, bool)>> {
            let w = match self.kind().window_for(grid, margin, threshold) {
                Ok(w) => w,
                Err(Error::DegenerateWindow(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let (c, exact) = self.grid_certificate(grid, threshold, &w)?;
            Ok(Some((w, c, exact)))
        };
        let plan = |(window, certificate, exact): (Window, f64, bool)| TruncationPlan {
            window,
            threshold,
            certificate,
            exact,
            budget,
        };
        if let Some(found) = evaluate(0.0)? {
            if found.1 <= budget {
                return Ok(plan(found));
            }
        }
        let mut lo = 0.0;
        let mut hi = self.kind().length_scale();
        let mut doublings = 0;
        let mut best = loop {
            doublings += 1;
            if doublings > 200 {
                return Err(Error::BudgetUnattainable { requested: budget, attainable: 1.0 });
            }
            match evaluate(hi)? {
                Some(found) if found.1 <= budget => break found,
                Some(found) => {
                    let mass = self.intensity().mass(&found.0)?;
                    if mass > MAX_MASS {
                        return Err(Error::BudgetUnattainable { requested: budget, attainable: found.1 });
                    }
                }
                None => {}
            }
            lo = hi;
            hi *= 2.0;
        };
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            match evaluate(mid)? {
                Some(found) if found.1 <= budget => {
                    hi = mid;
                    best = found;
                }
                _ => lo = mid,
            }
            if hi - lo <= 1e-4 * hi {
                break;
            }
        }
        if self.intensity().mass(&best.0)? > MAX_MASS {
            return Err(Error::BudgetUnattainable { requested: budget, attainable: best.1 });
        }
        Ok(plan(best))
    }
}

/// Bounding box of a point set.
pub(crate) fn bounding_box(grid: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = grid[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for t in grid {
        for i in 0..d {
            lo[i] = lo[i].min(t[i]);
            hi[i] = hi[i].max(t[i]);
        }
    }
    (lo, hi)
}

/// Uniform draw from the ball of radius `r` in `R^d`.
pub(crate) fn uniform_in_ball(d: usize, r: f64, rng: &mut SimRng) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-r..=r)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= r * r {
            return x;
        }
    }
}

/// Index of `t` among integer labels `0..n`.
pub(crate) fn label(t: &[f64], n: usize) -> Result<usize> {
    let v = t[0];
    if v.fract() != 0.0 || v < 0.0 || v >= n as f64 {
        return Err(invalid(format!("index {v} is not a label in 0..{n}")));
    }
    Ok(v as usize)
}
