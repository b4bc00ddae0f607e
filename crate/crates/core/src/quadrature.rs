//! Numerical integration used by the mass oracles and the metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A numerical value together with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            error: self.error * c.abs(),
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    /// Adaptive Simpson on closed-form level sets, exact sums on step functions.
    Adaptive,
    /// Monte Carlo over a dominating finite-mass window.
    MonteCarlo,
}

/// How integrals against μ are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    pub tolerance: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: QuadratureMethod::Adaptive,
            tolerance: 1e-9,
            mc_samples: 200_000,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

impl QuadratureSpec {
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self {
            method: QuadratureMethod::MonteCarlo,
            mc_samples: samples,
            seed,
            ..Self::default()
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

const MAX_DEPTH: u32 = 48;

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    evaluations: usize,
    budget: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evaluations += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || self.evaluations > self.budget || delta.abs() <= 15.0 * tol {
            return (left + right + delta / 15.0, delta.abs() / 15.0);
        }
        let (l, el) = self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
        let (r, er) = self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        (l + r, el + er)
    }
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns an error only when the accumulated error estimate exceeds the
/// tolerance by more than a factor of 1000 after the evaluation budget is spent.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if !(b > a) {
        return Ok(Estimate::exact(0.0));
    }
    let mut s = Simpson {
        f,
        evaluations: 3,
        budget: 4_000_000,
    };
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    // A first forced split keeps symmetric integrands from fooling the test.
    let (l, el) = {
        let lm = 0.5 * (a + m);
        let flm = f(lm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        s.step(a, m, fa, flm, fm, left, 0.5 * tol, MAX_DEPTH)
    };
    let (r, er) = {
        let rm = 0.5 * (m + b);
        let frm = f(rm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        s.step(m, b, fm, frm, fb, right, 0.5 * tol, MAX_DEPTH)
    };
    let value = l + r;
    let error = el + er;
    if !value.is_finite() || error > 1e3 * tol.max(1e-300) && error > 1e-6 * value.abs() {
        return Err(Error::Quadrature { residual: error });
    }
    Ok(Estimate::new(value, error))
}

/// Integrates over `[a, b]` after splitting at the given breakpoints, where
/// the integrand may have kinks or jumps.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<Estimate> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b && x.is_finite()).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pieces = (cuts.len() - 1).max(1) as f64;
    let mut total = Estimate::exact(0.0);
    for w in cuts.windows(2) {
        total = total + adaptive_simpson(f, w[0], w[1], tol / pieces)?;
    }
    Ok(total)
}

/// Gauss–Legendre nodes on [-1, 1] (10 points).
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Composite 10-point Gauss–Legendre rule on `panels` equal panels. Used
/// where the integrand is smooth and evaluations are expensive.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            total += w * (f(c - half * x) + f(c + half * x));
        }
    }
    total * 0.5 * h
}
