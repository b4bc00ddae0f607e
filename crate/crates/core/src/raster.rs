//! 8-bit grayscale rasters in binary PGM (P5) form.
//!
//! Values map to gray levels through the per-frame linear ramp
//! `min → 0, max → 255`; a constant frame is all zeros.

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// Row-major, `x` fastest.
    pub values: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(invalid(format!("raster {width}×{height} does not match {} values", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("raster value {i} is not finite")));
        }
        Ok(Self { width, height, values })
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn gray_levels(&self) -> Vec<u8> {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        self.values
            .iter()
            .map(|v| if span > 0.0 { (255.0 * (v - lo) / span).round() as u8 } else { 0 })
            .collect()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.gray_levels());
        out
    }

    /// Mean of `|v(x+1,y) − v(x,y)|` and `|v(x,y+1) − v(x,y)|` over all
    /// neighbouring pairs.
    pub fn mean_neighbor_difference(&self) -> f64 {
        let mut s = 0.0;
        let mut n = 0usize;
        for y in 0..self.height {
            for x in 0..self.width {
                if x + 1 < self.width {
                    s += (self.at(x + 1, y) - self.at(x, y)).abs();
                    n += 1;
                }
                if y + 1 < self.height {
                    s += (self.at(x, y + 1) - self.at(x, y)).abs();
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            s / n as f64
        }
    }

    /// Means of the left and right halves of the columns.
    pub fn half_means(&self) -> (f64, f64) {
        let half = self.width / 2;
        let (mut l, mut r) = (0.0, 0.0);
        for y in 0..self.height {
            for x in 0..self.width {
                if x < half {
                    l += self.at(x, y);
                } else if x >= self.width - half {
                    r += self.at(x, y);
                }
            }
        }
        let n = (half * self.height) as f64;
        (l / n, r / n)
    }
}

/// Parses a binary PGM with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = || Error::Config("not an 8-bit binary PGM".into());
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).map_err(|_| bad())?.to_string());
    }
    i += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad());
    }
    let w: usize = fields[1].parse().map_err(|_| bad())?;
    let h: usize = fields[2].parse().map_err(|_| bad())?;
    let data = bytes.get(i..i + w * h).ok_or_else(bad)?;
    Ok((w, h, data.to_vec()))
}
