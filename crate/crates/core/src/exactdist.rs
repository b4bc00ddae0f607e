//! Finite-dimensional laws in closed form or by quadrature: the joint CDF of
//! max-integrals and the joint characteristic function of sum-integrals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrator::{compensator_a, metric_d, Estimate2, Integrand, ModelSection, Section, StepFunction};
use crate::quadrature::{Estimate, QuadratureSpec};
use crate::spectral::SpectralModel;

/// Index points with thresholds (max case) or angles (sum case).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FddQuery {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Location function `c(t_j)` added to the sum-integral.
    #[serde(default)]
    pub location_offsets: Option<Vec<f64>>,
}

impl FddQuery {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let q = Self { points, values, location_offsets: None };
        q.check_lengths()?;
        Ok(q)
    }

    pub fn single(t: Vec<f64>, value: f64) -> Self {
        Self { points: vec![t], values: vec![value], location_offsets: None }
    }

    pub fn with_offsets(mut self, offsets: Vec<f64>) -> Result<Self> {
        self.location_offsets = Some(offsets);
        self.check_lengths()?;
        Ok(self)
    }

    fn check_lengths(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::EmptyInput("query has no points".into()));
        }
        if self.points.len() != self.values.len() {
            return Err(invalid("query points and values differ in length"));
        }
        if let Some(c) = &self.location_offsets {
            if c.len() != self.points.len() {
                return Err(invalid("location offsets differ in length from the points"));
            }
        }
        Ok(())
    }

    fn check_thresholds(&self) -> Result<()> {
        self.check_lengths()?;
        if self.values.iter().any(|x| !(*x >= 0.0)) {
            return Err(invalid("thresholds must be nonnegative"));
        }
        if self.values.iter().all(|x| *x == 0.0) {
            return Err(invalid("at least one threshold must be positive"));
        }
        Ok(())
    }
}

/// `P[M(t_j) < x_j ∀j] = exp(−μ(∪_j {f_{t_j} ≥ x_j}))`, where `M` is the
/// max-integral (for min-oriented models, before the `−ln` map).
pub fn fdd_cdf(model: &SpectralModel, query: &FddQuery, q: &QuadratureSpec) -> Result<Estimate> {
    query.check_thresholds()?;
    if query.values.iter().any(|x| *x == 0.0) {
        return Ok(Estimate::exact(0.0));
    }
    let mass = model.union_level_mass(&query.points, &query.values, q)?;
    let p = (-mass.value).exp();
    Ok(Estimate::new(p, p * mass.error))
}

/// `E exp(i Σ θ_j (X(t_j) + c(t_j)))` for the sum-integral of a single model
/// section; joint queries on model sections are not supported.
pub fn char_function(model: &SpectralModel, query: &FddQuery, _q: &QuadratureSpec) -> Result<Estimate2> {
    query.check_lengths()?;
    if query.values.iter().all(|v| *v == 0.0) {
        return Ok(Estimate2 { value: Complex64::new(1.0, 0.0), error: 0.0 });
    }
    if query.points.len() != 1 {
        return Err(Error::Unsupported("joint characteristic functions need step-function integrands".into()));
    }
    let s = ModelSection::new(model, &query.points[0]);
    let d = metric_d(Integrand::Section(&s), Integrand::Zero, &QuadratureSpec::default())?;
    if !d.value.is_finite() {
        return Err(invalid(format!("{} is not a sum-integrable model", model.name())));
    }
    let log = s.log_char(query.values[0])?;
    Ok(finish(log, query))
}

/// Joint characteristic function of `(I(f_1) + c_1, …, I(f_n) + c_n)` for
/// step integrands; `query.points[j]` is ignored and `f_j = fs[j]`.
pub fn char_function_steps(fs: &[StepFunction], query: &FddQuery) -> Result<Estimate2> {
    query.check_lengths()?;
    if fs.len() != query.values.len() {
        return Err(invalid("one step function per angle is required"));
    }
    let mut acc = fs[0].scaled(0.0);
    let mut centre = 0.0;
    for (f, th) in fs.iter().zip(&query.values) {
        acc = acc.add(&f.scaled(*th));
        centre += th * f.integrate(compensator_a);
    }
    let jumps: Complex64 = acc
        .widths
        .iter()
        .zip(&acc.values)
        .map(|(w, v)| *w * (Complex64::new(0.0, *v).exp() - 1.0))
        .sum();
    let log = Estimate2 { value: jumps - Complex64::new(0.0, centre), error: 0.0 };
    Ok(finish(log, query))
}

fn finish(log: Estimate2, query: &FddQuery) -> Estimate2 {
    let shift: f64 = match &query.location_offsets {
        Some(c) => c.iter().zip(&query.values).map(|(c, th)| c * th).sum(),
        None => 0.0,
    };
    // the real part ∫(cos θf − 1) dμ is nonpositive
    let value = Complex64::new(log.value.re.min(0.0), log.value.im + shift).exp();
    Estimate2 { value, error: value.norm() * log.error }
}
