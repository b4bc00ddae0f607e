//! Small statistical helpers for the Monte Carlo checks.

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[(Z·sd - c)_+]` for `Z ~ N(0, 1)`.
pub fn normal_excess(sd: f64, c: f64) -> f64 {
    if sd <= 0.0 {
        return (-c).max(0.0);
    }
    let z = c / sd;
    sd * normal_pdf(z) - c * (1.0 - normal_cdf(z))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    covariance(xs, ys) / (variance(xs) * variance(ys)).sqrt()
}

/// Standard deviation of a binomial frequency with success probability `p`.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov–Smirnov distance between the empirical law of
/// `samples` and a continuous or right-continuous `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let v = sorted(samples);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        // compare i/n with F(x−) and j/n with F(x)
        let f = cdf(x);
        let left = cdf(x.next_down());
        d = d.max((f - j as f64 / n).abs()).max((i as f64 / n - left).abs());
        i = j;
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance; ties are handled exactly.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Empirical quantile (lower, by order statistic).
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let v = sorted(xs);
    let k = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

/// Ordinary least-squares slope and intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn normal_excess_matches_quadrature() {
        let sd = 1.7;
        let c = 0.4;
        let q = crate::quadrature::adaptive_simpson(&|z: f64| (z * sd - c).max(0.0) * normal_pdf(z), -12.0, 12.0, 1e-12)
            .unwrap()
            .value;
        assert!((normal_excess(sd, c) - q).abs() < 1e-9);
    }

    #[test]
    fn ks_statistics() {
        let xs = [0.1, 0.2, 0.3, 0.4];
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.6).abs() < 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
    }

    #[test]
    fn ks_with_atoms() {
        // half zeros, half ones against the Bernoulli(1/2) cdf
        let xs = [0.0, 0.0, 1.0, 1.0];
        let d = ks_one_sample(&xs, |x| if x < 0.0 { 0.0 } else if x < 1.0 { 0.5 } else { 1.0 });
        assert!(d < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (s, b) = linear_fit(&xs, &ys);
        assert!((s + 0.5).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }
}
