//! Lebesgue content of the level sets that appear in the mass oracles:
//! unions of balls and boxes, and the parts of them that fall outside an
//! axis-aligned simulation window.

use rand::Rng;

use crate::error::Result;
use crate::quadrature::{integrate_pieces, Estimate};
use crate::rng::rng_from_seed;

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

pub fn ball_volume(d: usize, r: f64) -> f64 {
    unit_ball_volume(d) * r.powi(d as i32)
}

/// Closed interval `[lo, hi]`; empty when `hi < lo`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn centered(c: f64, half: f64) -> Self {
        Self::new(c - half, c + half)
    }

    pub fn len(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }

    /// Length of the part of `self` outside `window`.
    pub fn outside(&self, window: &Interval) -> f64 {
        self.len() - self.overlap(window)
    }
}

/// Length of a union of intervals.
pub fn union_length(intervals: &mut [Interval]) -> f64 {
    intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut total = 0.0;
    let mut cur: Option<Interval> = None;
    for iv in intervals.iter().filter(|i| !i.is_empty()) {
        match cur.as_mut() {
            Some(c) if iv.lo <= c.hi => c.hi = c.hi.max(iv.hi),
            _ => {
                if let Some(c) = cur {
                    total += c.len();
                }
                cur = Some(*iv);
            }
        }
    }
    if let Some(c) = cur {
        total += c.len();
    }
    total
}

/// A level set in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Rect { lower: Vec<f64>, upper: Vec<f64> },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } => center.len(),
            Shape::Rect { lower, .. } => lower.len(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Shape::Ball { center, radius } => ball_volume(center.len(), *radius),
            Shape::Rect { lower, upper } => lower.iter().zip(upper).map(|(l, u)| (u - l).max(0.0)).product(),
        }
    }

    fn bounds(&self, axis: usize) -> Interval {
        match self {
            Shape::Ball { center, radius } => Interval::centered(center[axis], *radius),
            Shape::Rect { lower, upper } => Interval::new(lower[axis], upper[axis]),
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball { center, radius } => {
                center.iter().zip(x).map(|(c, y)| (c - y) * (c - y)).sum::<f64>() <= radius * radius
            }
            Shape::Rect { lower, upper } => x.iter().enumerate().all(|(i, y)| *y >= lower[i] && *y <= upper[i]),
        }
    }

    /// For planar shapes: the vertical chord at abscissa `x`.
    fn chord(&self, x: f64) -> Interval {
        match self {
            Shape::Ball { center, radius } => {
                let dx = x - center[0];
                let h2 = radius * radius - dx * dx;
                if h2 <= 0.0 {
                    Interval::new(0.0, -1.0)
                } else {
                    Interval::centered(center[1], h2.sqrt())
                }
            }
            Shape::Rect { lower, upper } => {
                if x < lower[0] || x > upper[0] {
                    Interval::new(0.0, -1.0)
                } else {
                    Interval::new(lower[1], upper[1])
                }
            }
        }
    }

    fn is_inside_box(&self, lower: &[f64], upper: &[f64]) -> bool {
        (0..self.dim()).all(|a| {
            let b = self.bounds(a);
            b.lo >= lower[a] && b.hi <= upper[a]
        })
    }
}

/// Lebesgue content of a union of shapes, together with a flag telling
/// whether the value is exact (up to quadrature error) or a Monte Carlo
/// estimate.
pub fn union_volume(shapes: &[Shape], tol: f64, mc_samples: usize, seed: u64) -> Result<Estimate> {
    let shapes: Vec<&Shape> = shapes.iter().filter(|s| s.volume() > 0.0).collect();
    if shapes.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    match shapes[0].dim() {
        1 => {
            let mut ivs: Vec<Interval> = shapes.iter().map(|s| s.bounds(0)).collect();
            Ok(Estimate::exact(union_length(&mut ivs)))
        }
        2 => {
            if shapes.len() == 1 {
                return Ok(Estimate::exact(shapes[0].volume()));
            }
            let mut breaks = Vec::new();
            for s in &shapes {
                let b = s.bounds(0);
                breaks.extend([b.lo, b.hi]);
            }
            let lo = breaks.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = breaks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let f = |x: f64| {
                let mut ivs: Vec<Interval> = shapes.iter().map(|s| s.chord(x)).collect();
                union_length(&mut ivs)
            };
            integrate_pieces(&f, lo, hi, &breaks, tol)
        }
        d => {
            let mut lower = vec![f64::INFINITY; d];
            let mut upper = vec![f64::NEG_INFINITY; d];
            for s in &shapes {
                for a in 0..d {
                    let b = s.bounds(a);
                    lower[a] = lower[a].min(b.lo);
                    upper[a] = upper[a].max(b.hi);
                }
            }
            let vol: f64 = lower.iter().zip(&upper).map(|(l, u)| u - l).product();
            let mut rng = rng_from_seed(seed);
            let mut x = vec![0.0; d];
            let mut hits = 0usize;
            for _ in 0..mc_samples {
                for a in 0..d {
                    x[a] = rng.random_range(lower[a]..upper[a]);
                }
                if shapes.iter().any(|s| s.contains(&x)) {
                    hits += 1;
                }
            }
            let p = hits as f64 / mc_samples as f64;
            Ok(Estimate::new(vol * p, vol * (p * (1.0 - p) / mc_samples as f64).sqrt()))
        }
    }
}

/// Content of the part of `shape` lying outside the box `[lower, upper]`.
///
/// Exact in dimensions one and two. In higher dimension the full volume is
/// returned whenever the shape is not contained in the box; the second
/// component is `false` in that case to mark the value as an upper bound.
pub fn volume_outside_box(shape: &Shape, lower: &[f64], upper: &[f64], tol: f64) -> Result<(f64, bool)> {
    if shape.volume() == 0.0 || shape.is_inside_box(lower, upper) {
        return Ok((0.0, true));
    }
    match shape.dim() {
        1 => Ok((shape.bounds(0).outside(&Interval::new(lower[0], upper[0])), true)),
        2 => {
            let b = shape.bounds(0);
            let wx = Interval::new(lower[0], upper[0]);
            let wy = Interval::new(lower[1], upper[1]);
            let f = |x: f64| {
                let c = shape.chord(x);
                if x >= wx.lo && x <= wx.hi {
                    c.outside(&wy)
                } else {
                    c.len()
                }
            };
            let mut breaks = vec![wx.lo, wx.hi];
            if let Shape::Ball { center, radius } = shape {
                // abscissae where the circle crosses the horizontal window edges
                for y in [wy.lo, wy.hi] {
                    let dy = y - center[1];
                    let h2 = radius * radius - dy * dy;
                    if h2 > 0.0 {
                        breaks.extend([center[0] - h2.sqrt(), center[0] + h2.sqrt()]);
                    }
                }
            }
            let e = integrate_pieces(&f, b.lo, b.hi, &breaks, tol)?;
            Ok((e.value.max(0.0), true))
        }
        _ => Ok((shape.volume(), false)),
    }
}
