//! Empirical conservative/dissipative classification of stationary models.
//!
//! For `ω` drawn from the normalized core `{f_0 ≥ a₀}`, the growth curve
//! `S_R(ω) = ∫_{[−R,R]^d} ψ(|f_t(ω)|) dt` is evaluated on nested boxes. A
//! curve that keeps growing marks `ω` as lying in the conservative part.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{realize, FieldRealization};
use crate::gaussian::brownian_values;
use crate::integrator::log_scale_integral;
use crate::point_process::{sample_poisson, Atom, PointConfig};
use crate::quadrature::adaptive_simpson;
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::spectral::{uniform_in_ball, PenroseStorm, SpectralModel};

/// Registered test functions `ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi {
    /// `x ↦ 1 ∧ x²`.
    Square,
    /// `x ↦ e^{−1/x}`.
    ExpInv,
}

impl Psi {
    pub fn eval(self, x: f64) -> f64 {
        let x = x.abs();
        match self {
            Psi::Square => (x * x).min(1.0),
            Psi::ExpInv => {
                if x == 0.0 {
                    0.0
                } else {
                    (-1.0 / x).exp()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Psi::Square => "square",
            Psi::ExpInv => "exp_inv",
        }
    }

    fn derivative(self, y: f64) -> f64 {
        match self {
            Psi::Square => {
                if y < 1.0 {
                    2.0 * y
                } else {
                    0.0
                }
            }
            Psi::ExpInv => (-1.0 / y).exp() / (y * y),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowClassConfig {
    #[serde(default = "default_psi")]
    pub psi: Psi,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_ratio")]
    pub divergence_ratio: f64,
    /// Spacing of the integration lattice; per-dimension default when absent.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default = "crate::rng::default_seed")]
    pub seed: u64,
}

fn default_psi() -> Psi {
    Psi::Square
}

fn default_radii() -> Vec<f64> {
    (1..=7).map(|j| 2f64.powi(j)).collect()
}

fn default_samples() -> usize {
    200
}

fn default_ratio() -> f64 {
    4.0
}

impl Default for FlowClassConfig {
    fn default() -> Self {
        Self {
            psi: default_psi(),
            radii: default_radii(),
            samples: default_samples(),
            divergence_ratio: default_ratio(),
            step: None,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

/// Fraction of diverging curves at or above which the verdict is conservative.
pub const CONSERVATIVE_FRACTION: f64 = 0.95;
/// Fraction at or below which the verdict is dissipative.
pub const DISSIPATIVE_FRACTION: f64 = 0.05;
/// Largest tolerated share of undecided atoms in a split simulation.
pub const MAX_UNDECIDED: f64 = 0.10;

impl FlowClassConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0)) || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("radii must be positive and strictly increasing"));
        }
        if self.samples == 0 {
            return Err(invalid("at least one sample is required"));
        }
        if !(self.divergence_ratio > 1.0) {
            return Err(invalid(format!("divergence ratio must exceed 1, got {}", self.divergence_ratio)));
        }
        if let Some(h) = self.step {
            if !(h > 0.0) {
                return Err(invalid("lattice step must be positive"));
            }
        }
        Ok(())
    }

    fn step_for(&self, d: usize) -> f64 {
        self.step.unwrap_or(if d == 1 { 1.0 / 32.0 } else { 0.25 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Conservative,
    Dissipative,
    Undecided,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowClassReport {
    pub model: String,
    pub psi: Psi,
    pub radii: Vec<f64>,
    pub verdict: Verdict,
    pub diverging_fraction: f64,
    /// `∫ ψ(|f_0|) dμ`.
    pub psi_integral: f64,
    /// `S_{R_j}(ω)` for each sampled `ω`.
    pub curves: Vec<Vec<f64>>,
}

impl FlowClassReport {
    pub fn curves_csv(&self) -> String {
        let mut s = String::from("omega");
        for r in &self.radii {
            s.push_str(&format!(",R{r}"));
        }
        s.push('\n');
        for (i, c) in self.curves.iter().enumerate() {
            s.push_str(&i.to_string());
            for v in c {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn verdict_for(fraction: f64) -> Verdict {
    if fraction >= CONSERVATIVE_FRACTION {
        Verdict::Conservative
    } else if fraction <= DISSIPATIVE_FRACTION {
        Verdict::Dissipative
    } else {
        Verdict::Undecided
    }
}

/// `∫ ψ(|f_0|) dμ = ∫_0^∞ ψ'(y) μ{f_0 ≥ y} dy`, or an error when it diverges.
pub fn psi_integral(model: &SpectralModel, psi: Psi) -> Result<f64> {
    let t0 = vec![0.0; model.index_dim()];
    let sup = model.sup(&t0);
    let mass = |y: f64| model.level_mass(&t0, y);
    let top = sup.min(1.0);
    let low = log_scale_integral(&|y| Ok(psi.derivative(y) * mass(y)?), top)?;
    let floor = top * (-60f64).exp();
    let edge = floor * psi.derivative(floor) * mass(floor)?;
    let mut total = low.value;
    if psi == Psi::ExpInv && sup > 1.0 {
        // with w = 1/y the range (1, sup) becomes (1/sup, 1)
        let wlo = if sup.is_finite() { 1.0 / sup } else { 0.0 };
        let err = std::sync::Mutex::new(None);
        let g = |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            match mass(1.0 / w) {
                Ok(m) => (-w).exp() * m,
                Err(e) => {
                    *err.lock().unwrap() = Some(e);
                    f64::NAN
                }
            }
        };
        let high = adaptive_simpson(&g, wlo, 1.0, 1e-12);
        if let Some(e) = err.into_inner().unwrap() {
            return Err(e);
        }
        total += high?.value;
    }
    if !total.is_finite() || total > 1e15 || edge > 1e-8 * (1.0 + total) {
        return Err(Error::PsiNotAdmissible(format!(
            "∫ψ(|f_0|)dμ diverges for {} with ψ = {}",
            model.name(),
            psi.name()
        )));
    }
    Ok(total)
}

/// Integration lattice `h·Z^d ∩ [−R_max, R_max]^d` with the index of the
/// smallest radius whose box contains each node.
struct Lattice {
    nodes: Vec<Vec<f64>>,
    shell: Vec<usize>,
    cell: f64,
}

fn lattice(d: usize, h: f64, radii: &[f64]) -> Result<Lattice> {
    let rmax = *radii.last().unwrap();
    let n = (rmax / h).round() as i64;
    let per_axis = (2 * n + 1) as usize;
    let count = per_axis.checked_pow(d as u32).filter(|c| *c <= 50_000_000);
    let Some(count) = count else {
        return Err(Error::GridTooLarge { nodes: usize::MAX, limit: 50_000_000 });
    };
    let mut nodes = Vec::with_capacity(count);
    let mut shell = Vec::with_capacity(count);
    for idx in 0..count {
        let mut rem = idx;
        let mut t = Vec::with_capacity(d);
        for _ in 0..d {
            t.push(((rem % per_axis) as i64 - n) as f64 * h);
            rem /= per_axis;
        }
        let r = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let j = radii.partition_point(|&rj| rj < r - 1e-9 * h);
        nodes.push(t);
        shell.push(j);
    }
    Ok(Lattice { nodes, shell, cell: h.powi(d as i32) })
}

fn accumulate(lat: &Lattice, m: usize, values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut curve = vec![0.0; m];
    for (j, v) in lat.shell.iter().zip(values) {
        if *j < m {
            curve[*j] += v * lat.cell;
        }
    }
    for j in 1..m {
        curve[j] += curve[j - 1];
    }
    curve
}

fn model_curve(model: &SpectralModel, lat: &Lattice, psi: Psi, m: usize, atom: &Atom) -> Result<Vec<f64>> {
    let vals = lat.nodes.iter().map(|t| model.eval(t, atom).map(|f| psi.eval(f))).collect::<Result<Vec<_>>>()?;
    Ok(accumulate(lat, m, vals.into_iter()))
}

/// Curve of a Penrose Brownian atom: a fresh core location and a two-sided
/// Brownian path on the lattice.
fn penrose_curve(k: usize, core_radius: f64, lat: &Lattice, psi: Psi, m: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
    let times: Vec<f64> = lat.nodes.iter().map(|t| t[0]).collect();
    let u = uniform_in_ball(k, core_radius, rng);
    let mut path = Vec::with_capacity(times.len() * k);
    brownian_values(k, &times, rng, &mut path)?;
    let vals = (0..times.len()).map(|i| {
        let d: f64 = (0..k).map(|c| (u[c] + path[i * k + c]).powi(2)).sum::<f64>().sqrt();
        psi.eval((-d).exp())
    });
    Ok(accumulate(lat, m, vals))
}

fn diverges(curve: &[f64], ratio: f64) -> Option<bool> {
    let first = curve[0];
    if !(first > 0.0) {
        return None;
    }
    Some(curve[curve.len() - 1] / first >= ratio)
}

fn penrose_brownian_k(model: &SpectralModel) -> Option<usize> {
    match model {
        SpectralModel::Penrose(p) => match p.storm {
            PenroseStorm::Brownian { k } => Some(k),
            PenroseStorm::Fbm { .. } => None,
        },
        _ => None,
    }
}

pub fn classify(model: &SpectralModel, config: &FlowClassConfig) -> Result<FlowClassReport> {
    config.validate()?;
    if !model.stationary() {
        return Err(Error::Unsupported(format!("{} is not stationary", model.name())));
    }
    if matches!(model, SpectralModel::Penrose(_)) && penrose_brownian_k(model).is_none() {
        return Err(Error::Unsupported("flow classification of fBm Penrose storms".into()));
    }
    let d = model.index_dim();
    if d > 2 {
        return Err(Error::Unsupported(format!("index dimension {d}")));
    }
    let psi_integral = psi_integral(model, config.psi)?;
    let lat = lattice(d, config.step_for(d), &config.radii)?;
    let m = config.radii.len();
    let curves = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(config.seed, i as u64));
            match penrose_brownian_k(model) {
                Some(k) => penrose_curve(k, -model.core_level().ln(), &lat, config.psi, m, &mut rng),
                None => {
                    let atom = model.sample_core(&mut rng)?;
                    model_curve(model, &lat, config.psi, m, &atom)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let diverging = curves.iter().filter(|c| diverges(c, config.divergence_ratio) == Some(true)).count();
    let diverging_fraction = diverging as f64 / curves.len() as f64;
    Ok(FlowClassReport {
        model: model.name().to_string(),
        psi: config.psi,
        radii: config.radii.clone(),
        verdict: verdict_for(diverging_fraction),
        diverging_fraction,
        psi_integral,
        curves,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomLabel {
    Conservative,
    Dissipative,
    Undecided,
    /// The atom is zero on the whole grid.
    Inactive,
}

/// A simulation split into the conservative and dissipative parts of the
/// atoms; undecided and inactive atoms go to the dissipative part.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CdSplit {
    pub full: FieldRealization,
    pub conservative: FieldRealization,
    pub dissipative: FieldRealization,
    pub labels: Vec<AtomLabel>,
    pub undecided: usize,
}

/// Labels one atom after shifting it so that its maximum over `grid` sits at
/// the origin.
pub fn label_atom(model: &SpectralModel, config: &FlowClassConfig, grid: &[Vec<f64>], atom: &Atom) -> Result<AtomLabel> {
    let d = model.index_dim();
    let lat = lattice(d, config.step_for(d), &config.radii)?;
    label_with(model, config, &lat, grid, atom)
}

fn label_with(model: &SpectralModel, config: &FlowClassConfig, lat: &Lattice, grid: &[Vec<f64>], atom: &Atom) -> Result<AtomLabel> {
    let mut best = (0.0, 0usize);
    for (i, t) in grid.iter().enumerate() {
        let v = model.eval(t, atom)?;
        if v > best.0 {
            best = (v, i);
        }
    }
    if best.0 == 0.0 {
        return Ok(AtomLabel::Inactive);
    }
    let shift = |s: &[f64], a: &Atom| {
        model
            .shift_atom(s, a)
            .ok_or_else(|| Error::Unsupported(format!("{} has no flow action", model.name())))
    };
    let mut shifted = shift(&grid[best.1], atom)?;
    // recentre on the peak over the lattice when it lies off the grid
    let vals = lat.nodes.iter().map(|t| model.eval(t, &shifted)).collect::<Result<Vec<_>>>()?;
    let peak = vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |m, (i, v)| if *v > m.1 { (i, *v) } else { m });
    let origin = model.eval(&vec![0.0; lat.nodes[0].len()], &shifted)?;
    if peak.1 > origin {
        shifted = shift(&lat.nodes[peak.0], &shifted)?;
    }
    let curve = model_curve(model, lat, config.psi, config.radii.len(), &shifted)?;
    Ok(match diverges(&curve, config.divergence_ratio) {
        Some(true) => AtomLabel::Conservative,
        Some(false) => AtomLabel::Dissipative,
        None => AtomLabel::Undecided,
    })
}

pub fn cd_split_simulate(model: &SpectralModel, config: &FlowClassConfig, grid: &[Vec<f64>], budget: f64, seed: u64) -> Result<CdSplit> {
    config.validate()?;
    if matches!(model, SpectralModel::Penrose(_)) {
        return Err(Error::Unsupported("split simulation of Penrose fields".into()));
    }
    if !model.stationary() {
        return Err(Error::Unsupported(format!("{} is not stationary", model.name())));
    }
    let d = model.index_dim();
    let lat = lattice(d, config.step_for(d), &config.radii)?;
    let plan = model.truncation_plan(grid, budget)?;
    let all = sample_poisson(model.intensity(), &plan.window, seed)?;
    let labels = all
        .atoms
        .par_iter()
        .map(|a| label_with(model, config, &lat, grid, a))
        .collect::<Result<Vec<_>>>()?;
    let active = labels.iter().filter(|l| **l != AtomLabel::Inactive).count();
    let undecided = labels.iter().filter(|l| **l == AtomLabel::Undecided).count();
    if active > 0 && undecided as f64 > MAX_UNDECIDED * active as f64 {
        return Err(Error::TooManyUndecided { undecided, total: active });
    }
    let part = |want: bool| PointConfig {
        atoms: all
            .atoms
            .iter()
            .zip(&labels)
            .filter(|(_, l)| (**l == AtomLabel::Conservative) == want)
            .map(|(a, _)| a.clone())
            .collect(),
        window: all.window.clone(),
        seed,
    };
    Ok(CdSplit {
        full: realize(model, grid, &plan, &all)?,
        conservative: realize(model, grid, &plan, &part(true))?,
        dissipative: realize(model, grid, &plan, &part(false))?,
        labels,
        undecided,
    })
}

/// Pointwise maximum of two fields on the same grid.
pub fn pointwise_max(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x.max(*y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::StormProfile;

    fn indicator_mm() -> SpectralModel {
        SpectralModel::make_moving_maxima(StormProfile::indicator(1.0, 1.0).unwrap(), 1.0, 1).unwrap()
    }

    fn quick() -> FlowClassConfig {
        FlowClassConfig { samples: 20, ..FlowClassConfig::default() }
    }

    #[test]
    fn psi_values() {
        assert_eq!(Psi::Square.eval(3.0), 1.0);
        assert_eq!(Psi::Square.eval(-0.5), 0.25);
        assert_eq!(Psi::ExpInv.eval(0.0), 0.0);
        assert!((Psi::ExpInv.eval(1.0) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn psi_integral_closed_forms() {
        // f = e^{-|u|}: ∫ 1 ∧ f² du = 1
        let m = SpectralModel::make_moving_maxima(StormProfile::exp_bump(1.0, 1.0).unwrap(), 1.0, 1).unwrap();
        assert!((psi_integral(&m, Psi::Square).unwrap() - 1.0).abs() < 1e-8);
        // indicator of [-1, 1]: ∫ψ(1) = 2ψ(1)
        let v = psi_integral(&indicator_mm(), Psi::ExpInv).unwrap();
        assert!((v - 2.0 * (-1f64).exp()).abs() < 1e-8, "{v}");
    }

    #[test]
    fn curves_are_monotone_and_saturate() {
        let r = classify(&indicator_mm(), &quick()).unwrap();
        for c in &r.curves {
            assert!(c.windows(2).all(|w| w[1] >= w[0]));
        }
        assert_eq!(r.verdict, Verdict::Dissipative);
    }

    #[test]
    fn lattice_shells_nest() {
        let lat = lattice(1, 0.5, &[1.0, 2.0]).unwrap();
        assert_eq!(lat.nodes.len(), 9);
        let inner = lat.shell.iter().filter(|&&j| j == 0).count();
        assert_eq!(inner, 5);
    }

    #[test]
    fn invalid_configs() {
        let mut c = quick();
        c.radii = vec![4.0, 2.0];
        assert!(classify(&indicator_mm(), &c).is_err());
        let mut c = quick();
        c.divergence_ratio = 1.0;
        assert!(classify(&indicator_mm(), &c).is_err());
    }

    #[test]
    fn split_reconstructs() {
        let m = indicator_mm();
        let grid: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 * 0.25]).collect();
        let s = cd_split_simulate(&m, &quick(), &grid, 1e-3, 3).unwrap();
        assert_eq!(pointwise_max(&s.conservative.values, &s.dissipative.values), s.full.values);
        assert!(s.conservative.values.iter().all(|v| *v == 0.0));
    }
}
