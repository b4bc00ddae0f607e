//! Poisson point processes with σ-finite intensity, restricted to finite-mass
//! windows.
//!
//! The domain is a product `R^d × M_1 × … × M_k`: a location box and a list of
//! mark components, each drawn from a closed registry of laws with exact mass
//! oracles. A [`Window`] restricts both the location box and the marks (for
//! example a Fréchet mark is restricted to `[floor, ∞)`), and an
//! [`IntensityMeasure`] is a constant density on locations times the product
//! of the mark measures.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::StormPathLaw;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Monotone CDF table `x_0 < x_1 < …`, `F` nondecreasing and linearly
/// interpolated, used for the i.i.d. marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

impl CdfTable {
    pub fn new(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if x.len() != f.len() || x.len() < 2 {
            return Err(invalid("cdf table needs matching x and F columns with at least two rows"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("cdf table abscissae must be strictly increasing"));
        }
        if f.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("cdf table is not monotone"));
        }
        if x[0] != 0.0 || f[0] >= 1.0 || f[0] < 0.0 || *f.last().unwrap() != 1.0 {
            return Err(invalid("cdf table must start at x = 0 with F(0) < 1 and end with F = 1"));
        }
        Ok(Self { x, f })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.x[0] {
            return self.f[0];
        }
        let n = self.x.len();
        if x >= self.x[n - 1] {
            return 1.0;
        }
        let i = self.x.partition_point(|&v| v <= x) - 1;
        let w = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.f[i] + w * (self.f[i + 1] - self.f[i])
    }

    /// `-ln F(x)`, the mass `μ({t} × [x, ∞))` of the i.i.d. construction.
    pub fn tail_mass(&self, x: f64) -> f64 {
        let f = self.cdf(x);
        if f <= 0.0 {
            f64::INFINITY
        } else {
            -f.ln()
        }
    }

    /// Smallest `x` with `F(x) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= self.f[0] {
            return self.x[0];
        }
        let i = self.f.partition_point(|&v| v < p);
        if i >= self.f.len() {
            return *self.x.last().unwrap();
        }
        let (f0, f1) = (self.f[i - 1], self.f[i]);
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        if f1 == f0 {
            x1
        } else {
            x0 + (p - f0) / (f1 - f0) * (x1 - x0)
        }
    }

    pub fn sup(&self) -> f64 {
        let i = self.f.iter().position(|&v| v >= 1.0).unwrap();
        self.x[i]
    }
}

/// Law of one mark component. The measure is not normalized: `mass()` is its
/// total mass on the restricted range.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MarkLaw {
    /// Lebesgue measure on `[low, high)`.
    Uniform { low: f64, high: f64 },
    /// `α z^{-α-1} dz` on `[floor, ∞)`.
    Frechet { alpha: f64, floor: f64 },
    /// The measure with tail `ν([x, ∞)) = -ln F(x)`, restricted to `[floor, ∞)`.
    CdfTail { table: CdfTable, floor: f64 },
    /// Probability law of a sampled Gaussian storm path on a grid.
    StormPath(Arc<StormPathLaw>),
}

impl PartialEq for MarkLaw {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (MarkLaw::Uniform { low: a, high: b }, MarkLaw::Uniform { low: c, high: d }) => a == c && b == d,
            (MarkLaw::Frechet { alpha: a, floor: f }, MarkLaw::Frechet { alpha: b, floor: g }) => a == b && f == g,
            (MarkLaw::CdfTail { table: a, floor: f }, MarkLaw::CdfTail { table: b, floor: g }) => a == b && f == g,
            (MarkLaw::StormPath(a), MarkLaw::StormPath(b)) => Arc::ptr_eq(a, b) || **a == **b,
            _ => false,
        }
    }
}

impl MarkLaw {
    pub fn mass(&self) -> f64 {
        match self {
            MarkLaw::Uniform { low, high } => high - low,
            MarkLaw::Frechet { alpha, floor } => {
                if *floor <= 0.0 {
                    f64::INFINITY
                } else {
                    floor.powf(-alpha)
                }
            }
            MarkLaw::CdfTail { table, floor } => {
                if *floor <= 0.0 {
                    table.tail_mass(0.0)
                } else {
                    table.tail_mass(*floor)
                }
            }
            MarkLaw::StormPath(_) => 1.0,
        }
    }

    /// Number of coordinates one draw occupies in [`Atom::mark`].
    pub fn width(&self) -> usize {
        match self {
            MarkLaw::StormPath(law) => law.width(),
            _ => 1,
        }
    }

    /// Same law up to the restriction (floor) of the range.
    fn same_family(&self, other: &Self) -> bool {
        match (self, other) {
            (MarkLaw::Uniform { .. }, MarkLaw::Uniform { .. }) => true,
            (MarkLaw::Frechet { alpha: a, .. }, MarkLaw::Frechet { alpha: b, .. }) => a == b,
            (MarkLaw::CdfTail { table: a, .. }, MarkLaw::CdfTail { table: b, .. }) => a == b,
            (MarkLaw::StormPath(a), MarkLaw::StormPath(b)) => Arc::ptr_eq(a, b) || **a == **b,
            _ => false,
        }
    }

    fn sample_into(&self, rng: &mut SimRng, path_seed: u64, out: &mut Vec<f64>) -> Result<()> {
        match self {
            MarkLaw::Uniform { low, high } => out.push(rng.random_range(*low..*high)),
            MarkLaw::Frechet { alpha, floor } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                out.push(floor * u.powf(-1.0 / alpha));
            }
            MarkLaw::CdfTail { table, floor } => {
                let v: f64 = 1.0 - rng.random::<f64>();
                let p = table.cdf(floor.max(0.0)).powf(v);
                out.push(table.quantile(p).max(*floor));
            }
            MarkLaw::StormPath(law) => out.extend(law.sample(path_seed)?),
        }
        Ok(())
    }
}

/// Restriction domain: a location box times restricted mark ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub marks: Vec<MarkLaw>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, marks: Vec<MarkLaw>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DegenerateWindow("bounds must have equal, nonzero length".into()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::DegenerateWindow(format!("axis {i}: lower {l} is not below upper {u}")));
            }
        }
        Ok(Self { lower, upper, marks })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains(&self, location: &[f64]) -> bool {
        location.iter().enumerate().all(|(i, x)| *x >= self.lower[i] && *x < self.upper[i])
    }

    pub fn mark_width(&self) -> usize {
        self.marks.iter().map(MarkLaw::width).sum()
    }

    /// The location box as a one-line description.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (l, u) in self.lower.iter().zip(&self.upper) {
            let _ = write!(s, "[{l},{u})");
        }
        s
    }
}

/// Constant density `rate` on `R^dim` times the product of mark measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityMeasure {
    pub rate: f64,
    pub dim: usize,
    pub marks: Vec<MarkLaw>,
}

impl IntensityMeasure {
    pub fn new(rate: f64, dim: usize, marks: Vec<MarkLaw>) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid(format!("intensity rate must be finite and nonnegative, got {rate}")));
        }
        Ok(Self { rate, dim, marks })
    }

    pub fn lebesgue(rate: f64, dim: usize) -> Result<Self> {
        Self::new(rate, dim, Vec::new())
    }

    fn check(&self, window: &Window) -> Result<()> {
        if window.dim() != self.dim {
            return Err(invalid(format!("window has dimension {}, intensity {}", window.dim(), self.dim)));
        }
        if window.marks.len() != self.marks.len() || window.marks.iter().zip(&self.marks).any(|(a, b)| !a.same_family(b)) {
            return Err(invalid("window marks do not match the intensity's mark laws"));
        }
        Ok(())
    }

    /// `μ(window)`.
    pub fn mass(&self, window: &Window) -> Result<f64> {
        self.check(window)?;
        let m = self.rate * window.volume() * window.marks.iter().map(MarkLaw::mass).product::<f64>();
        if !m.is_finite() {
            return Err(Error::InfiniteMass);
        }
        Ok(m)
    }

    /// Same measure with the density multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { rate: self.rate * c, ..self.clone() }
    }
}

/// One point of the process: a location and its flattened mark vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mark: Vec<f64>,
}

impl Atom {
    pub fn new(location: Vec<f64>, mark: Vec<f64>) -> Self {
        Self { location, mark }
    }

    pub fn at(location: Vec<f64>) -> Self {
        Self { location, mark: Vec::new() }
    }
}

/// A finite realization of the Poisson process on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    pub atoms: Vec<Atom>,
    pub window: Window,
    pub seed: u64,
}

impl PointConfig {
    pub fn empty(window: Window, seed: u64) -> Self {
        Self { atoms: Vec::new(), window, seed }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms whose location lies in the box `[lower, upper)`.
    pub fn restrict(&self, lower: &[f64], upper: &[f64]) -> Result<PointConfig> {
        let window = Window::new(lower.to_vec(), upper.to_vec(), self.window.marks.clone())?;
        let atoms = self.atoms.iter().filter(|a| window.contains(&a.location)).cloned().collect();
        Ok(PointConfig { atoms, window, seed: self.seed })
    }

    /// One atom per row: location columns, then mark columns.
    pub fn to_csv(&self) -> String {
        let d = self.window.dim();
        let m = self.window.mark_width();
        let mut s = String::new();
        let header: Vec<String> = (0..d).map(|i| format!("x{i}")).chain((0..m).map(|i| format!("m{i}"))).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for a in &self.atoms {
            let row: Vec<String> = a.location.iter().chain(&a.mark).map(|v| format!("{v:e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn sample_atom(intensity: &IntensityMeasure, window: &Window, rng: &mut SimRng, seed: u64, index: usize) -> Result<Atom> {
    let location = (0..intensity.dim).map(|i| rng.random_range(window.lower[i]..window.upper[i])).collect();
    let mut mark = Vec::with_capacity(window.mark_width());
    let path_seed = derive_seed(seed, index as u64 + 1);
    for law in &window.marks {
        law.sample_into(rng, path_seed, &mut mark)?;
    }
    Ok(Atom { location, mark })
}

/// Draws `N ~ Poisson(μ(window))`, then `N` i.i.d. points from the normalized
/// restriction of `μ`. Storm-path marks use their own sub-stream
/// `derive_seed(seed, i + 1)` for atom `i`.
pub fn sample_poisson(intensity: &IntensityMeasure, window: &Window, seed: u64) -> Result<PointConfig> {
    let mass = intensity.mass(window)?;
    let mut rng = rng_from_seed(seed);
    let n = poisson_count(mass, &mut rng)?;
    let atoms = (0..n)
        .map(|i| sample_atom(intensity, window, &mut rng, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointConfig { atoms, window: window.clone(), seed })
}

pub(crate) fn poisson_count(mass: f64, rng: &mut SimRng) -> Result<usize> {
    if mass == 0.0 {
        return Ok(0);
    }
    let law = Poisson::new(mass).map_err(|e| invalid(format!("poisson mean {mass}: {e}")))?;
    Ok(law.sample(rng) as usize)
}

/// Splits a configuration into kept and discarded parts, each atom kept
/// independently with probability `keep_prob`.
pub fn split(config: &PointConfig, keep_prob: f64, seed: u64) -> Result<(PointConfig, PointConfig)> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(invalid(format!("keep probability must lie in (0, 1], got {keep_prob}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut kept = PointConfig::empty(config.window.clone(), seed);
    let mut dropped = PointConfig::empty(config.window.clone(), seed);
    for a in &config.atoms {
        if keep_prob == 1.0 || rng.random::<f64>() < keep_prob {
            kept.atoms.push(a.clone());
        } else {
            dropped.atoms.push(a.clone());
        }
    }
    Ok((kept, dropped))
}

pub fn thin(config: &PointConfig, keep_prob: f64, seed: u64) -> Result<PointConfig> {
    split(config, keep_prob, seed).map(|(k, _)| k)
}

pub fn superpose(configs: &[PointConfig]) -> Result<PointConfig> {
    let first = configs.first().ok_or_else(|| Error::EmptyInput("superpose needs at least one configuration".into()))?;
    if configs.iter().any(|c| c.window != first.window) {
        return Err(Error::WindowMismatch);
    }
    let atoms = configs.iter().flat_map(|c| c.atoms.iter().cloned()).collect();
    Ok(PointConfig { atoms, window: first.window.clone(), seed: first.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_window(hi: f64) -> Window {
        Window::new(vec![0.0], vec![hi], vec![]).unwrap()
    }

    #[test]
    fn zero_mass_gives_empty() {
        let mu = IntensityMeasure::lebesgue(0.0, 1).unwrap();
        let c = sample_poisson(&mu, &unit_window(5.0), 1).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn degenerate_window_rejected() {
        assert!(matches!(Window::new(vec![1.0], vec![1.0], vec![]), Err(Error::DegenerateWindow(_))));
    }

    #[test]
    fn infinite_mass_rejected() {
        let mu = IntensityMeasure::new(1.0, 1, vec![MarkLaw::Frechet { alpha: 1.0, floor: 0.0 }]).unwrap();
        let w = Window::new(vec![0.0], vec![1.0], vec![MarkLaw::Frechet { alpha: 1.0, floor: 0.0 }]).unwrap();
        assert!(matches!(sample_poisson(&mu, &w, 0), Err(Error::InfiniteMass)));
    }

    #[test]
    fn mean_count_matches_mass() {
        let mu = IntensityMeasure::lebesgue(2.0, 1).unwrap();
        let w = unit_window(5.0);
        let n = 100_000;
        let total: usize = (0..n).map(|i| sample_poisson(&mu, &w, derive_seed(11, i)).unwrap().len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 10.0).abs() <= 3.0 * (10.0f64 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn empty_probability() {
        let mu = IntensityMeasure::lebesgue(1.0, 1).unwrap();
        let w = unit_window(1.0);
        let n = 100_000;
        let empty = (0..n).filter(|&i| sample_poisson(&mu, &w, derive_seed(12, i)).unwrap().is_empty()).count();
        assert!((empty as f64 / n as f64 - (-1f64).exp()).abs() <= 0.005);
    }

    #[test]
    fn thinning_quarter() {
        let mu = IntensityMeasure::lebesgue(8.0, 1).unwrap();
        let w = unit_window(1.0);
        let n = 10_000;
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                let c = sample_poisson(&mu, &w, derive_seed(13, i)).unwrap();
                thin(&c, 0.25, derive_seed(14, i)).unwrap().len() as f64
            })
            .collect();
        let m = crate::stats::mean(&counts);
        assert!((m - 2.0).abs() <= 3.0 * (2.0f64 / n as f64).sqrt(), "{m}");
    }

    #[test]
    fn superposition_of_quarters() {
        let mu = IntensityMeasure::lebesgue(1.0, 1).unwrap();
        let w = unit_window(4.0);
        let n = 10_000u64;
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                let parts: Vec<_> = (0..4).map(|j| sample_poisson(&mu.scaled(0.25), &w, derive_seed(i, j)).unwrap()).collect();
                superpose(&parts).unwrap().len() as f64
            })
            .collect();
        let m = crate::stats::mean(&counts);
        assert!((m - 4.0).abs() <= 3.0 * (4.0 / n as f64).sqrt());
    }

    #[test]
    fn superpose_edge_cases() {
        assert!(superpose(&[]).is_err());
        let mu = IntensityMeasure::lebesgue(3.0, 1).unwrap();
        let c = sample_poisson(&mu, &unit_window(1.0), 5).unwrap();
        let e = PointConfig::empty(c.window.clone(), 0);
        assert_eq!(superpose(&[c.clone(), e]).unwrap().atoms, c.atoms);
        let other = PointConfig::empty(unit_window(2.0), 0);
        assert!(matches!(superpose(&[c, other]), Err(Error::WindowMismatch)));
    }

    #[test]
    fn thin_edge_cases() {
        let mu = IntensityMeasure::lebesgue(3.0, 1).unwrap();
        let c = sample_poisson(&mu, &unit_window(1.0), 5).unwrap();
        assert_eq!(thin(&c, 1.0, 9).unwrap().atoms, c.atoms);
        assert!(thin(&c, 0.0, 9).is_err());
        assert!(thin(&c, 1.5, 9).is_err());
        let e = PointConfig::empty(c.window.clone(), 0);
        assert!(thin(&e, 0.5, 1).unwrap().is_empty());
    }

    #[test]
    fn disjoint_subwindow_counts_are_independent() {
        // 2x2 table of (left count > 0, right count > 0), chi-square with one
        // degree of freedom at significance 1e-3 (critical value 10.83)
        let mu = IntensityMeasure::lebesgue(1.0, 1).unwrap();
        let w = unit_window(2.0);
        let n = 10_000u64;
        let mut table = [[0f64; 2]; 2];
        for i in 0..n {
            let c = sample_poisson(&mu, &w, derive_seed(21, i)).unwrap();
            let left = c.atoms.iter().filter(|a| a.location[0] < 1.0).count();
            let right = c.len() - left;
            table[(left > 0) as usize][(right > 0) as usize] += 1.0;
        }
        let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
        let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
        let mut chi2 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let e = rows[r] * cols[c] / n as f64;
                chi2 += (table[r][c] - e).powi(2) / e;
            }
        }
        assert!(chi2 < 10.83, "{chi2}");
        // marginal of each half is Poisson(1)
        assert!((rows[0] / n as f64 - (-1f64).exp()).abs() < 4.0 * crate::stats::binomial_sigma((-1f64).exp(), n as usize));
    }

    #[test]
    fn frechet_marks_respect_floor() {
        let law = MarkLaw::Frechet { alpha: 2.0, floor: 0.5 };
        let mu = IntensityMeasure::new(1.0, 1, vec![MarkLaw::Frechet { alpha: 2.0, floor: 0.0 }]).unwrap();
        let w = Window::new(vec![0.0], vec![100.0], vec![law]).unwrap();
        assert!((mu.mass(&w).unwrap() - 400.0).abs() < 1e-9);
        let c = sample_poisson(&mu, &w, 3).unwrap();
        assert!(c.atoms.iter().all(|a| a.mark[0] >= 0.5));
        // P(z ≥ 1 | z ≥ 0.5) = (1/0.5)^{-2} = 0.25
        let frac = c.atoms.iter().filter(|a| a.mark[0] >= 1.0).count() as f64 / c.len() as f64;
        assert!((frac - 0.25).abs() < 0.05);
    }

    #[test]
    fn cdf_table_validation() {
        assert!(CdfTable::new(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(CdfTable::new(vec![0.0, 1.0], vec![0.5, 0.9]).is_err());
        let t = CdfTable::new(vec![0.0, 1.0, 2.0], vec![0.2, 0.6, 1.0]).unwrap();
        assert!((t.quantile(0.4) - 0.5).abs() < 1e-12);
        assert_eq!(t.sup(), 2.0);
    }

    #[test]
    fn csv_and_json() {
        let mu = IntensityMeasure::lebesgue(3.0, 2).unwrap();
        let w = Window::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![]).unwrap();
        let c = sample_poisson(&mu, &w, 2).unwrap();
        let csv = c.to_csv();
        assert_eq!(csv.lines().count(), c.len() + 1);
        let back: PointConfig = serde_json::from_str(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    proptest! {
        #[test]
        fn sampling_is_deterministic(seed in any::<u64>(), rate in 0.0f64..20.0) {
            let mu = IntensityMeasure::lebesgue(rate, 1).unwrap();
            let w = unit_window(1.0);
            prop_assert_eq!(sample_poisson(&mu, &w, seed).unwrap(), sample_poisson(&mu, &w, seed).unwrap());
        }

        #[test]
        fn atoms_lie_in_window(seed in any::<u64>(), lo in -5.0f64..0.0, len in 0.1f64..5.0) {
            let mu = IntensityMeasure::lebesgue(4.0, 2).unwrap();
            let w = Window::new(vec![lo, lo], vec![lo + len, lo + len], vec![]).unwrap();
            let c = sample_poisson(&mu, &w, seed).unwrap();
            prop_assert!(c.atoms.iter().all(|a| w.contains(&a.location)));
        }

        #[test]
        fn split_then_superpose_is_identity(seed in any::<u64>(), p in 0.01f64..1.0) {
            let mu = IntensityMeasure::lebesgue(10.0, 1).unwrap();
            let c = sample_poisson(&mu, &unit_window(1.0), seed).unwrap();
            let (k, d) = split(&c, p, seed ^ 1).unwrap();
            let mut merged = superpose(&[k, d]).unwrap().atoms;
            let mut orig = c.atoms.clone();
            let key = |a: &Atom| a.location[0];
            merged.sort_by(|a, b| key(a).total_cmp(&key(b)));
            orig.sort_by(|a, b| key(a).total_cmp(&key(b)));
            prop_assert_eq!(merged, orig);
        }

        #[test]
        fn mass_is_additive(a in 0.1f64..3.0, b in 0.1f64..3.0, rate in 0.0f64..5.0) {
            let mu = IntensityMeasure::lebesgue(rate, 1).unwrap();
            let whole = mu.mass(&unit_window(a + b)).unwrap();
            let left = mu.mass(&unit_window(a)).unwrap();
            let right = mu.mass(&Window::new(vec![a], vec![a + b], vec![]).unwrap()).unwrap();
            prop_assert!((whole - left - right).abs() < 1e-12 * (1.0 + whole));
        }
    }
}
