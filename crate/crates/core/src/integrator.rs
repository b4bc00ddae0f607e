//! Max- and sum-integrals of spectral functions against a Poisson process,
//! truncation certificates, and the metrics on integrands.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::point_process::{Atom, IntensityMeasure, PointConfig, Window};
use crate::quadrature::{adaptive_simpson, Estimate, QuadratureSpec};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::spectral::SpectralModel;

/// The centering function: `u` clamped to `[−1, 1]`.
pub fn compensator_a(u: f64) -> f64 {
    u.clamp(-1.0, 1.0)
}

/// A single spectral function `f` on `(Ω, μ)`.
pub trait Section: Sync {
    fn value(&self, atom: &Atom) -> Result<f64>;
    /// `μ{|f| ≥ y}` for `y > 0`.
    fn mass_at_least(&self, y: f64) -> Result<f64>;
    fn sup_abs(&self) -> f64;
    fn intensity(&self) -> &IntensityMeasure;
    /// A window containing `{|f| > y}`.
    fn window_above(&self, y: f64) -> Result<Window>;

    /// `∫_{|f|>ε} a(f) dμ`. The default assumes `f ≥ 0`.
    fn compensator(&self, eps: f64) -> Result<Estimate> {
        let at_eps = self.mass_at_least(eps)?;
        if eps >= 1.0 {
            return Ok(Estimate::exact(at_eps));
        }
        let tail = level_integral(self, eps, 1.0f64.min(self.sup_abs()), |_| 1.0)?;
        Ok(Estimate::new(eps * at_eps + tail.value, tail.error))
    }

    /// `∫_{|f|≤ε} f² dμ`. The default assumes `f ≥ 0`.
    fn small_jump_variance(&self, eps: f64) -> Result<Estimate> {
        let at_eps = self.mass_at_least(eps)?;
        let f = |y: f64| -> Result<f64> { Ok(2.0 * y * (self.mass_at_least(y)? - at_eps)) };
        log_scale_integral(&f, eps)
    }

    /// `∫ (e^{iθf} − 1 − iθ a(f)) dμ`. The default assumes `f ≥ 0`.
    fn log_char(&self, theta: f64) -> Result<Estimate2> {
        let sup = self.sup_abs();
        let low = |y: f64| -> Result<Complex64> {
            let e = Complex64::new(0.0, theta * y).exp();
            Ok(Complex64::new(0.0, theta) * (e - 1.0) * self.mass_at_least(y)?)
        };
        let top = 1.0f64.min(sup);
        let mut out = complex_log_scale_integral(&low, top)?;
        if sup > 1.0 {
            let upper = if sup.is_finite() {
                sup
            } else {
                let mut y = 2.0;
                while self.mass_at_least(y)? > 1e-12 {
                    y *= 2.0;
                    if y > 1e12 {
                        return Err(Error::Quadrature { residual: self.mass_at_least(y)? });
                    }
                }
                out.error += 2.0 * self.mass_at_least(y)?;
                y
            };
            let high = |y: f64| -> Result<Complex64> {
                Ok(Complex64::new(0.0, theta) * Complex64::new(0.0, theta * y).exp() * self.mass_at_least(y)?)
            };
            let part = complex_integral(&high, 1.0, upper)?;
            out.value += part.value;
            out.error += part.error;
        }
        Ok(out)
    }
}

/// A complex value with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate2 {
    pub value: Complex64,
    pub error: f64,
}

fn capture<T>(slot: &std::sync::Mutex<Option<Error>>, r: Result<T>, fallback: T) -> T {
    match r {
        Ok(v) => v,
        Err(e) => {
            *slot.lock().unwrap() = Some(e);
            fallback
        }
    }
}

/// `∫_0^top g(y) dy` on the scale `y = top·e^{−v}`, suited to the integrable
/// singularities of level masses at zero.
pub(crate) fn log_scale_integral(g: &dyn Fn(f64) -> Result<f64>, top: f64) -> Result<Estimate> {
    if !(top > 0.0) {
        return Ok(Estimate::exact(0.0));
    }
    let err = std::sync::Mutex::new(None);
    let h = |v: f64| {
        let y = top * (-v).exp();
        capture(&err, g(y), f64::NAN) * y
    };
    let r = crate::quadrature::integrate_pieces(&h, 0.0, 60.0, &[1.0, 3.0, 10.0, 25.0], 1e-12 * (1.0 + top));
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    r
}

fn complex_log_scale_integral(g: &dyn Fn(f64) -> Result<Complex64>, top: f64) -> Result<Estimate2> {
    let re = log_scale_integral(&|y| g(y).map(|c| c.re), top)?;
    let im = log_scale_integral(&|y| g(y).map(|c| c.im), top)?;
    Ok(Estimate2 { value: Complex64::new(re.value, im.value), error: re.error + im.error })
}

fn complex_integral(g: &dyn Fn(f64) -> Result<Complex64>, a: f64, b: f64) -> Result<Estimate2> {
    let err = std::sync::Mutex::new(None);
    let re = adaptive_simpson(&|y| capture(&err, g(y).map(|c| c.re), f64::NAN), a, b, 1e-11);
    let im = adaptive_simpson(&|y| capture(&err, g(y).map(|c| c.im), f64::NAN), a, b, 1e-11);
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    let (re, im) = (re?, im?);
    Ok(Estimate2 { value: Complex64::new(re.value, im.value), error: re.error + im.error })
}

/// `∫_lo^hi w(y) μ{|f| ≥ y} dy`.
fn level_integral<S: Section + ?Sized>(s: &S, lo: f64, hi: f64, w: impl Fn(f64) -> f64) -> Result<Estimate> {
    if hi <= lo {
        return Ok(Estimate::exact(0.0));
    }
    let err = std::sync::Mutex::new(None);
    let f = |y: f64| capture(&err, s.mass_at_least(y), f64::NAN) * w(y);
    let r = adaptive_simpson(&f, lo, hi, 1e-12);
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    r
}

/// `f_t` of a model, viewed as a function on `(Ω, μ)`.
pub struct ModelSection<'a> {
    pub model: &'a SpectralModel,
    pub t: Vec<f64>,
}

impl<'a> ModelSection<'a> {
    pub fn new(model: &'a SpectralModel, t: &[f64]) -> Self {
        Self { model, t: t.to_vec() }
    }
}

impl Section for ModelSection<'_> {
    fn value(&self, atom: &Atom) -> Result<f64> {
        self.model.eval(&self.t, atom)
    }

    fn mass_at_least(&self, y: f64) -> Result<f64> {
        self.model.level_mass(&self.t, y)
    }

    fn sup_abs(&self) -> f64 {
        self.model.sup(&self.t)
    }

    fn intensity(&self) -> &IntensityMeasure {
        self.model.intensity()
    }

    fn window_above(&self, y: f64) -> Result<Window> {
        self.model.level_window(&self.t, y)
    }
}

/// A step function on `[0, total)` with Lebesgue measure: cell `k` has width
/// (μ-mass) `widths[k]` and value `values[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub widths: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(skip, default = "lebesgue_line")]
    intensity: IntensityMeasure,
}

fn lebesgue_line() -> IntensityMeasure {
    IntensityMeasure { rate: 1.0, dim: 1, marks: Vec::new() }
}

impl StepFunction {
    pub fn new(widths: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if widths.len() != values.len() || widths.is_empty() {
            return Err(invalid("step function needs matching, nonempty widths and values"));
        }
        if widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("step widths must be positive and values finite"));
        }
        Ok(Self { widths, values, intensity: lebesgue_line() })
    }

    /// `c·1_A` with `μ(A) = mass`.
    pub fn indicator(mass: f64, c: f64) -> Result<Self> {
        Self::new(vec![mass], vec![c])
    }

    pub fn total(&self) -> f64 {
        self.widths.iter().sum()
    }

    fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.widths.len() + 1);
        let mut acc = 0.0;
        e.push(0.0);
        for w in &self.widths {
            acc += w;
            e.push(acc);
        }
        e
    }

    pub fn at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let e = self.edges();
        let i = e.partition_point(|&v| v <= x);
        if i == 0 || i > self.values.len() {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    /// `op(f, g)` on the common refinement of the two partitions; each
    /// function is zero beyond its total width.
    pub fn combine(&self, other: &StepFunction, op: impl Fn(f64, f64) -> f64) -> StepFunction {
        let (ea, eb) = (self.edges(), other.edges());
        let mut edges: Vec<f64> = ea.iter().chain(&eb).copied().collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
        let mut widths = Vec::new();
        let mut values = Vec::new();
        for w in edges.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            widths.push(w[1] - w[0]);
            values.push(op(self.at(mid), other.at(mid)));
        }
        StepFunction { widths, values, intensity: lebesgue_line() }
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, |a, b| a - b)
    }

    pub fn scaled(&self, c: f64) -> StepFunction {
        StepFunction { values: self.values.iter().map(|v| c * v).collect(), ..self.clone() }
    }

    /// `∫ g(f) dμ`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.widths.iter().zip(&self.values).map(|(w, v)| w * g(*v)).sum()
    }

    /// One exact draw of the compensated integral `I(f)`; the measure is
    /// finite, so no small-jump truncation is needed.
    pub fn sampler(&self) -> Result<StepSampler> {
        let laws = self
            .widths
            .iter()
            .map(|w| Poisson::new(*w).map_err(|e| invalid(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(StepSampler { laws, values: self.values.clone(), centre: self.integrate(compensator_a) })
    }
}

/// Draws `I(f) = Σ_k v_k N_k − ∫ a(f) dμ` with `N_k ~ Poisson(width_k)`.
pub struct StepSampler {
    laws: Vec<Poisson<f64>>,
    values: Vec<f64>,
    centre: f64,
}

impl StepSampler {
    pub fn draw(&self, rng: &mut SimRng) -> f64 {
        let mut s = 0.0;
        for (law, v) in self.laws.iter().zip(&self.values) {
            let n: f64 = law.sample(rng);
            s += v * n;
        }
        s - self.centre
    }
}

impl Section for StepFunction {
    fn value(&self, atom: &Atom) -> Result<f64> {
        Ok(self.at(atom.location[0]))
    }

    fn mass_at_least(&self, y: f64) -> Result<f64> {
        Ok(self.integrate(|v| if v.abs() >= y { 1.0 } else { 0.0 }))
    }

    fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn intensity(&self) -> &IntensityMeasure {
        &self.intensity
    }

    fn window_above(&self, _y: f64) -> Result<Window> {
        Window::new(vec![0.0], vec![self.total()], vec![])
    }

    fn compensator(&self, eps: f64) -> Result<Estimate> {
        Ok(Estimate::exact(self.integrate(|v| if v.abs() > eps { compensator_a(v) } else { 0.0 })))
    }

    fn small_jump_variance(&self, eps: f64) -> Result<Estimate> {
        Ok(Estimate::exact(self.integrate(|v| if v.abs() <= eps { v * v } else { 0.0 })))
    }

    fn log_char(&self, theta: f64) -> Result<Estimate2> {
        let v: Complex64 = self
            .widths
            .iter()
            .zip(&self.values)
            .map(|(w, v)| *w * (Complex64::new(0.0, theta * v).exp() - 1.0 - Complex64::new(0.0, theta * compensator_a(*v))))
            .sum();
        Ok(Estimate2 { value: v, error: 0.0 })
    }
}

/// `sup_i f(U_i)`, zero for an empty configuration.
pub fn max_integral<S: Section + ?Sized>(section: &S, config: &PointConfig) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (index, atom) in config.atoms.iter().enumerate() {
        let v = section.value(atom).map_err(|e| Error::Evaluation {
            index,
            location: atom.location.clone(),
            reason: e.to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::Evaluation { index, location: atom.location.clone(), reason: format!("value {v}") });
        }
        best = best.max(v);
    }
    Ok(best)
}

pub fn max_integral_at(model: &SpectralModel, t: &[f64], config: &PointConfig) -> Result<f64> {
    max_integral(&ModelSection::new(model, t), config)
}

/// Probabilities that atoms outside a window reach given thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCertificate {
    pub thresholds: Vec<f64>,
    pub exceed_prob: Vec<f64>,
    pub window: Window,
    /// False when some value is an upper bound from an envelope.
    pub exact: bool,
}

impl TruncationCertificate {
    pub fn at(&self, a: f64) -> Option<f64> {
        self.thresholds.iter().position(|&x| x == a).map(|i| self.exceed_prob[i])
    }
}

pub fn tail_certificate(model: &SpectralModel, t: &[f64], window: &Window, thresholds: &[f64]) -> Result<TruncationCertificate> {
    let mut exceed_prob = Vec::with_capacity(thresholds.len());
    let mut exact = true;
    for &a in thresholds {
        let m = model.tail_mass(t, a, window)?;
        exact &= m.exact;
        exceed_prob.push(-(-m.value).exp_m1());
    }
    Ok(TruncationCertificate { thresholds: thresholds.to_vec(), exceed_prob, window: window.clone(), exact })
}

/// Truncation level and centering for the compensated sum-integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumIntegralPlan {
    pub epsilon: f64,
    pub compensator_integral: f64,
    pub compensator_error: f64,
    pub remainder_variance_bound: f64,
    pub window: Window,
}

/// Largest `ε` whose neglected small-jump variance is at most `tol²`.
pub fn plan_sum_integral<S: Section + ?Sized>(section: &S, tol: f64) -> Result<SumIntegralPlan> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let sup = section.sup_abs();
    if sup == 0.0 {
        return Err(invalid("the integrand vanishes identically"));
    }
    let target = tol * tol;
    let top = if sup.is_finite() { sup } else { 1.0 };
    let mut eps = top;
    let mut var = section.small_jump_variance(eps)?.value;
    if var > target {
        let (mut lo, mut hi) = ((top * 1e-15).ln(), top.ln());
        if section.small_jump_variance(lo.exp())?.value > target {
            return Err(invalid("no truncation level meets the variance tolerance"));
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if section.small_jump_variance(mid.exp())?.value <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        eps = lo.exp();
        var = section.small_jump_variance(eps)?.value;
    }
    let comp = section.compensator(eps)?;
    Ok(SumIntegralPlan {
        epsilon: eps,
        compensator_integral: comp.value,
        compensator_error: comp.error,
        remainder_variance_bound: var,
        window: section.window_above(eps)?,
    })
}

fn covers(outer: &Window, inner: &Window) -> bool {
    outer.dim() == inner.dim()
        && outer.marks == inner.marks
        && (0..outer.dim()).all(|i| outer.lower[i] <= inner.lower[i] && outer.upper[i] >= inner.upper[i])
}

/// `Σ f(U_i) 1{|f(U_i)| > ε} − ∫_{|f|>ε} a(f) dμ`.
pub fn sum_integral<S: Section + ?Sized>(section: &S, config: &PointConfig, plan: &SumIntegralPlan) -> Result<f64> {
    if !covers(&config.window, &plan.window) {
        return Err(invalid("configuration was not sampled on the plan's window"));
    }
    let mut s = 0.0;
    for (index, atom) in config.atoms.iter().enumerate() {
        let v = section.value(atom).map_err(|e| Error::Evaluation {
            index,
            location: atom.location.clone(),
            reason: e.to_string(),
        })?;
        if v.abs() > plan.epsilon {
            s += v;
        }
    }
    Ok(s - plan.compensator_integral)
}

/// Operands of the integrand metrics.
#[derive(Clone, Copy)]
pub enum Integrand<'a> {
    Zero,
    Step(&'a StepFunction),
    Section(&'a dyn Section),
}

fn pair<'a>(f: Integrand<'a>, g: Integrand<'a>) -> Result<Pair<'a>> {
    use Integrand::*;
    Ok(match (f, g) {
        (Zero, Zero) => Pair::Zero,
        (Step(a), Step(b)) => Pair::Steps(a.clone(), b.clone()),
        (Step(a), Zero) | (Zero, Step(a)) => Pair::Steps(a.clone(), a.scaled(0.0)),
        (Section(s), Zero) | (Zero, Section(s)) => Pair::One(s),
        _ => return Err(Error::Unsupported("metrics between two model sections need a joint mass oracle".into())),
    })
}

enum Pair<'a> {
    Zero,
    Steps(StepFunction, StepFunction),
    One(&'a dyn Section),
}

/// `γ(f, g) = ∫ (a(f+g) − a(f) − a(g)) dμ`.
pub fn gamma(f: Integrand, g: Integrand, _q: &QuadratureSpec) -> Result<Estimate> {
    match pair(f, g)? {
        Pair::Zero | Pair::One(_) => Ok(Estimate::exact(0.0)),
        Pair::Steps(a, b) => Ok(Estimate::exact(
            a.combine(&b, |x, y| compensator_a(x + y) - compensator_a(x) - compensator_a(y)).integrate(|v| v),
        )),
    }
}

/// `d(f, g) = (∫ 1 ∧ (f − g)² dμ)^{1/2}`.
pub fn metric_d(f: Integrand, g: Integrand, _q: &QuadratureSpec) -> Result<Estimate> {
    match pair(f, g)? {
        Pair::Zero => Ok(Estimate::exact(0.0)),
        Pair::Steps(a, b) => Ok(Estimate::exact(a.sub(&b).integrate(|v| (v * v).min(1.0)).sqrt())),
        Pair::One(s) => {
            let sq = level_integral(s, 0.0, 1.0f64.min(s.sup_abs()), |y| 2.0 * y);
            // 2y·μ{f ≥ y} may be singular at 0; fall back to the log scale
            let sq = match sq {
                Ok(v) => v,
                Err(_) => log_scale_integral(&|y| Ok(2.0 * y * s.mass_at_least(y)?), 1.0f64.min(s.sup_abs()))?,
            };
            let v = sq.value.max(0.0).sqrt();
            Ok(Estimate::new(v, if v > 0.0 { sq.error / (2.0 * v) } else { sq.error.sqrt() }))
        }
    }
}

/// `d_μ(f, g) = inf{ε > 0 : μ{|f − g| ≥ ε} ≤ ε}`, by bisection on `ε`.
pub fn metric_dmu(f: Integrand, g: Integrand, _q: &QuadratureSpec) -> Result<Estimate> {
    let mass: Box<dyn Fn(f64) -> Result<f64> + '_> = match pair(f, g)? {
        Pair::Zero => return Ok(Estimate::exact(0.0)),
        Pair::Steps(a, b) => {
            let d = a.sub(&b);
            Box::new(move |e| d.mass_at_least(e))
        }
        Pair::One(s) => Box::new(move |e| s.mass_at_least(e)),
    };
    // the predicate μ{|h| ≥ ε} ≤ ε is monotone in ε
    let ok = |e: f64| -> Result<bool> { Ok(mass(e)? <= e) };
    let mut hi = 1.0;
    while !ok(hi)? {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::InfiniteMass);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Estimate::new(hi, hi - lo))
}

/// Empirical Ky Fan distance `inf{δ > 0 : P̂(|x − y| ≥ δ) ≤ δ}` of paired samples.
pub fn ky_fan(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyInput("ky_fan needs samples".into()));
    }
    if x.len() != y.len() {
        return Err(invalid("paired samples differ in length"));
    }
    let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
    Ok(ky_fan_abs(&mut d))
}

/// Ky Fan distance to zero of `|d_i|`; sorts `d` in place.
pub fn ky_fan_abs(d: &mut [f64]) -> f64 {
    let n = d.len();
    d.sort_by(|a, b| b.total_cmp(a));
    let mut best: f64 = 1.0;
    // on (d_(k+1), d_(k)] the empirical tail equals k/n
    for k in 0..=n {
        let upper = if k == 0 { f64::INFINITY } else { d[k - 1] };
        let lower = if k == n { 0.0 } else { d[k] };
        let cand = (k as f64 / n as f64).max(lower);
        if cand <= upper {
            best = best.min(cand);
        }
    }
    best.min(1.0)
}

/// Binomial standard error of an empirical Ky Fan distance `δ` from `n` draws.
pub fn ky_fan_error(delta: f64, n: usize) -> f64 {
    (delta * (1.0 - delta).max(0.0) / n as f64).sqrt()
}

/// Outcome of one randomized trial of the metric inequalities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditTrial {
    pub trial: usize,
    pub cells: usize,
    /// `3 d(f+g)² + 2 (d(f)+d(g)) d(f+g) − |γ(f,g)|`.
    pub gamma_margin: f64,
    /// `2 d(f)^{2/3} + 3 se − d_KF(I(f))`.
    pub upper_margin: f64,
    /// `2 d_KF(I(f) − I(f)′) + 3 se − (1 − e^{−c d(f)²})`.
    pub lower_margin: f64,
}

impl AuditTrial {
    pub fn passed(&self) -> bool {
        self.gamma_margin >= -AUDIT_TOLERANCE && self.upper_margin >= -AUDIT_TOLERANCE && self.lower_margin >= -AUDIT_TOLERANCE
    }
}

/// Numeric slack allowed on top of the stated Monte Carlo margins.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// Random pair of step functions on a common partition.
pub fn random_step_pair(rng: &mut SimRng) -> Result<(StepFunction, StepFunction)> {
    let k = rng.random_range(1..=6);
    let widths: Vec<f64> = (0..k).map(|_| 10f64.powf(rng.random_range(-3.0..0.5))).collect();
    let sf = 10f64.powf(rng.random_range(-2.0..0.5));
    let sg = 10f64.powf(rng.random_range(-2.0..0.5));
    let f = (0..k).map(|_| sf * rng.random_range(-2.5..2.5)).collect();
    let g = (0..k).map(|_| sg * rng.random_range(-2.5..2.5)).collect();
    Ok((StepFunction::new(widths.clone(), f)?, StepFunction::new(widths, g)?))
}

/// One trial: the γ bound exactly, and both Ky Fan inequalities from
/// `replicates` exact draws of `I(f)`.
pub fn audit_trial(trial: usize, seed: u64, replicates: usize) -> Result<AuditTrial> {
    let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
    let (f, g) = random_step_pair(&mut rng)?;
    let q = QuadratureSpec::default();
    let fg = f.add(&g);
    let d = |h: &StepFunction| metric_d(Integrand::Step(h), Integrand::Zero, &q).map(|e| e.value);
    let (df, dg, dfg) = (d(&f)?, d(&g)?, d(&fg)?);
    let gm = gamma(Integrand::Step(&f), Integrand::Step(&g), &q)?.value;
    let gamma_margin = 3.0 * dfg * dfg + 2.0 * (df + dg) * dfg - gm.abs();

    let sampler = f.sampler()?;
    let mut first = Vec::with_capacity(replicates);
    let mut diff = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let a = sampler.draw(&mut rng);
        let b = sampler.draw(&mut rng);
        first.push(a.abs());
        diff.push((a - b).abs());
    }
    let kf = ky_fan_abs(&mut first);
    let kf_diff = ky_fan_abs(&mut diff);
    let upper_margin = 2.0 * df.powf(2.0 / 3.0) + 3.0 * ky_fan_error(kf, replicates) - kf;
    let c = 1.0 - 1f64.sin();
    let lower_margin = 2.0 * kf_diff + 3.0 * 2.0 * ky_fan_error(kf_diff, replicates) - (1.0 - (-c * df * df).exp());
    Ok(AuditTrial { trial, cells: f.widths.len(), gamma_margin, upper_margin, lower_margin })
}

/// Runs `trials` independent audit trials in parallel.
pub fn metric_audit(trials: usize, seed: u64, replicates: usize) -> Result<Vec<AuditTrial>> {
    (0..trials).into_par_iter().map(|i| audit_trial(i, seed, replicates)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::sample_poisson;
    use crate::spectral::StormProfile;
    use proptest::prelude::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn compensator_cases() {
        assert_eq!(compensator_a(0.5), 0.5);
        assert_eq!(compensator_a(2.0), 1.0);
        assert_eq!(compensator_a(-3.0), -1.0);
    }

    #[test]
    fn max_integral_basics() {
        let f = StepFunction::indicator(1.0, 3.2).unwrap();
        let w = f.window_above(0.0).unwrap();
        assert_eq!(max_integral(&f, &PointConfig::empty(w.clone(), 0)).unwrap(), 0.0);
        let c = PointConfig { atoms: vec![Atom::at(vec![0.5])], window: w, seed: 0 };
        assert_eq!(max_integral(&f, &c).unwrap(), 3.2);
    }

    #[test]
    fn tail_certificate_examples() {
        let m = SpectralModel::make_moving_maxima(StormProfile::exp_bump(1.0, 1.0).unwrap(), 1.0, 1).unwrap();
        let w = Window::new(vec![-10.0], vec![10.0], vec![]).unwrap();
        let c = tail_certificate(&m, &[0.0], &w, &[0.5, 1e6]).unwrap();
        assert_eq!(c.exceed_prob, vec![0.0, 0.0]);
        let w = Window::new(vec![-1.0], vec![1.0], vec![]).unwrap();
        let c = tail_certificate(&m, &[0.0], &w, &[(-2f64).exp()]).unwrap();
        assert!((c.exceed_prob[0] - (1.0 - (-2f64).exp())).abs() < 1e-12);
        assert!(c.exact);
    }

    #[test]
    fn sum_integral_compound_poisson_mean() {
        let f = StepFunction::indicator(2.0, 1.0).unwrap();
        let mut plan = plan_sum_integral(&f, 1e-3).unwrap();
        assert!((plan.compensator_integral - 2.0).abs() < 1e-15);
        plan.epsilon = 0.5;
        let n = 100_000u64;
        let mu = f.intensity().clone();
        let mut total = 0.0;
        for i in 0..n {
            let c = sample_poisson(&mu, &plan.window, derive_seed(31, i)).unwrap();
            total += sum_integral(&f, &c, &plan).unwrap();
        }
        let mean = total / n as f64;
        assert!(mean.abs() <= 3.0 * (2.0 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn sum_integral_empty_and_mismatch() {
        let f = StepFunction::indicator(2.0, 1.0).unwrap();
        let plan = plan_sum_integral(&f, 1e-3).unwrap();
        let c = PointConfig::empty(plan.window.clone(), 0);
        assert_eq!(sum_integral(&f, &c, &plan).unwrap(), -plan.compensator_integral);
        let small = PointConfig::empty(Window::new(vec![0.0], vec![1.0], vec![]).unwrap(), 0);
        assert!(sum_integral(&f, &small, &plan).is_err());
    }

    #[test]
    fn sum_integral_scaling() {
        let f = StepFunction::new(vec![0.5, 1.5], vec![0.2, -0.4]).unwrap();
        let f2 = f.scaled(2.0);
        let mut p1 = plan_sum_integral(&f, 1e-3).unwrap();
        let mut p2 = plan_sum_integral(&f2, 1e-3).unwrap();
        p1.epsilon = 0.0;
        p2.epsilon = 0.0;
        p1.compensator_integral = f.compensator(0.0).unwrap().value;
        p2.compensator_integral = f2.compensator(0.0).unwrap().value;
        let c = sample_poisson(f.intensity(), &p1.window, 5).unwrap();
        let a = sum_integral(&f, &c, &p1).unwrap();
        let b = sum_integral(&f2, &c, &p2).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn model_section_plan_controls_variance() {
        let m = SpectralModel::make_moving_maxima(StormProfile::exp_bump(1.0, 1.0).unwrap(), 1.0, 1).unwrap();
        let s = ModelSection::new(&m, &[0.0]);
        let plan = plan_sum_integral(&s, 1e-3).unwrap();
        assert!(plan.remainder_variance_bound <= 1e-6 * (1.0 + 1e-9));
        // ∫_{f≤ε} f² dμ = ∫_{|u|≥ln(1/ε)} e^{-2|u|} du = ε²
        assert!((plan.remainder_variance_bound - plan.epsilon.powi(2)).abs() < 1e-9);
        // ∫_{f>ε} a(f) dμ = 2(1 − ε)
        assert!((plan.compensator_integral - 2.0 * (1.0 - plan.epsilon)).abs() < 1e-8);
    }

    #[test]
    fn gamma_examples() {
        let f = StepFunction::new(vec![0.3, 0.4], vec![0.2, -0.5]).unwrap();
        let g = StepFunction::new(vec![0.3, 0.4], vec![0.1, 0.3]).unwrap();
        assert!(gamma(Integrand::Step(&f), Integrand::Step(&g), &q()).unwrap().value.abs() < 1e-15);
        let one = StepFunction::indicator(0.7, 1.0).unwrap();
        assert!((gamma(Integrand::Step(&one), Integrand::Step(&one), &q()).unwrap().value + 0.7).abs() < 1e-15);
        assert_eq!(gamma(Integrand::Step(&f), Integrand::Zero, &q()).unwrap().value, 0.0);
    }

    #[test]
    fn metric_examples() {
        let f = StepFunction::indicator(0.25, 2.0).unwrap();
        assert!((metric_d(Integrand::Step(&f), Integrand::Zero, &q()).unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(metric_d(Integrand::Step(&f), Integrand::Step(&f), &q()).unwrap().value, 0.0);
        let h = StepFunction::indicator(0.1, 0.3).unwrap();
        let dm = metric_dmu(Integrand::Step(&h), Integrand::Zero, &q()).unwrap();
        assert!((dm.value - 0.1).abs() < 1e-12);
        assert!(metric_dmu(Integrand::Step(&f), Integrand::Step(&f), &q()).unwrap().value < 1e-12);
    }

    #[test]
    fn section_metric_against_zero() {
        // d(f)² = ∫ 1 ∧ e^{-2|u|} du = 1 for f = e^{-|u|}
        let m = SpectralModel::make_moving_maxima(StormProfile::exp_bump(1.0, 1.0).unwrap(), 1.0, 1).unwrap();
        let s = ModelSection::new(&m, &[0.0]);
        let d = metric_d(Integrand::Section(&s), Integrand::Zero, &q()).unwrap();
        assert!((d.value - 1.0).abs() < 1e-7, "{}", d.value);
        // d_μ solves 2 ln(1/ε) = ε
        let e = metric_dmu(Integrand::Section(&s), Integrand::Zero, &q()).unwrap().value;
        assert!((2.0 * (1.0 / e).ln() - e).abs() < 1e-9);
    }

    #[test]
    fn ky_fan_examples() {
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(ky_fan(&x, &x).unwrap(), 0.0);
        let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        assert_eq!(ky_fan(&x, &y).unwrap(), 1.0);
        assert!(ky_fan(&[], &[]).is_err());
        // |Δ| = (0.5, 0, 0, 0): P(|Δ| ≥ δ) = 1/4 for δ ≤ 0.5
        assert_eq!(ky_fan(&[0.5, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap(), 0.25);
    }

    #[test]
    fn audit_trials_pass() {
        let trials = metric_audit(20, 3, 20_000).unwrap();
        for t in &trials {
            assert!(t.passed(), "{t:?}");
        }
    }

    proptest! {
        #[test]
        fn ky_fan_in_unit_interval(xs in proptest::collection::vec(-10.0f64..10.0, 1..50)) {
            let zeros = vec![0.0; xs.len()];
            let v = ky_fan(&xs, &zeros).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn d_is_symmetric_and_triangular(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let (f, g) = random_step_pair(&mut rng).unwrap();
            let (h, _) = random_step_pair(&mut rng).unwrap();
            let d = |a: &StepFunction, b: &StepFunction| metric_d(Integrand::Step(a), Integrand::Step(b), &q()).unwrap().value;
            prop_assert!((d(&f, &g) - d(&g, &f)).abs() < 1e-12);
            prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
        }

        #[test]
        fn gamma_bound_holds(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let (f, g) = random_step_pair(&mut rng).unwrap();
            let d = |a: &StepFunction| metric_d(Integrand::Step(a), Integrand::Zero, &q()).unwrap().value;
            let (df, dg, dfg) = (d(&f), d(&g), d(&f.add(&g)));
            let gm = gamma(Integrand::Step(&f), Integrand::Step(&g), &q()).unwrap().value;
            prop_assert!(gm.abs() <= 3.0 * dfg * dfg + 2.0 * (df + dg) * dfg + 1e-9);
        }

        #[test]
        fn dmu_is_monotone(seed in any::<u64>(), shrink in 0.0f64..1.0) {
            let mut rng = rng_from_seed(seed);
            let (f, _) = random_step_pair(&mut rng).unwrap();
            let small = f.scaled(shrink);
            let a = metric_dmu(Integrand::Step(&f), Integrand::Zero, &q()).unwrap().value;
            let b = metric_dmu(Integrand::Step(&small), Integrand::Zero, &q()).unwrap().value;
            prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn adding_an_atom_never_decreases_sup(seed in any::<u64>(), x in 0.0f64..2.0) {
            let f = StepFunction::new(vec![0.5, 1.0, 0.5], vec![0.3, 2.0, 1.1]).unwrap();
            let w = f.window_above(0.0).unwrap();
            let mut c = sample_poisson(f.intensity(), &w, seed).unwrap();
            let before = max_integral(&f, &c).unwrap();
            c.atoms.push(Atom::at(vec![x]));
            prop_assert!(max_integral(&f, &c).unwrap() >= before);
        }
    }
}
