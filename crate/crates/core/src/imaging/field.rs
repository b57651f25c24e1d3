use crate::error::{invalid, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A complex field sampled on a regular grid. `data[j * nx + i]` holds the
/// value at `(x(i), y(j))`; lengths in um.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMap {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub dx: f64,
    pub dy: f64,
    pub data: Vec<Complex64>,
}

impl FieldMap {
    /// A zero field on a grid centered at the origin.
    pub fn zeros(nx: usize, ny: usize, half_extent_x: f64, half_extent_y: f64) -> Self {
        let dx = 2.0 * half_extent_x / (nx - 1).max(1) as f64;
        let dy = 2.0 * half_extent_y / (ny - 1).max(1) as f64;
        Self { nx, ny, x_min: -half_extent_x, y_min: -half_extent_y, dx, dy, data: vec![Complex64::new(0.0, 0.0); nx * ny] }
    }

    /// Sample `f(x, y)` on a centered square grid.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(n: usize, half_extent: f64, f: F) -> Self {
        let mut m = Self::zeros(n, n, half_extent, half_extent);
        for j in 0..m.ny {
            for i in 0..m.nx {
                m.data[j * m.nx + i] = f(m.x(i), m.y(j));
            }
        }
        m
    }

    /// Unit-norm Gaussian beam `exp(-|r - c|^2 / w^2)`.
    pub fn gaussian_pump(n: usize, half_extent: f64, waist: f64, center: [f64; 2]) -> Self {
        let m = Self::from_fn(n, half_extent, |x, y| {
            let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
            Complex64::new((-r2 / (waist * waist)).exp(), 0.0)
        });
        m.normalized()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.nx + i]
    }

    /// Full widths of the sampled region.
    pub fn extent(&self) -> [f64; 2] {
        [(self.nx - 1) as f64 * self.dx, (self.ny - 1) as f64 * self.dy]
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || self.data.len() != self.nx * self.ny {
            return invalid("field grid shape is inconsistent");
        }
        if !(self.dx > 0.0 && self.dy > 0.0) {
            return invalid("grid spacing must be positive");
        }
        if self.data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return invalid("field contains non-finite values");
        }
        Ok(())
    }

    /// `int |E|^2 dA`.
    pub fn power(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx * self.dy
    }

    pub fn normalized(mut self) -> Self {
        let s = self.power().sqrt();
        if s > 0.0 {
            self.data.iter_mut().for_each(|v| *v /= s);
        }
        self
    }

    /// `|E|^2` as a real-valued map.
    pub fn intensity(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = Complex64::new(v.norm_sqr(), 0.0));
        out
    }

    /// Largest magnitude on the outer ring of samples relative to the peak.
    pub fn edge_fraction(&self) -> f64 {
        let peak = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut edge: f64 = 0.0;
        for i in 0..self.nx {
            edge = edge.max(self.at(i, 0).norm()).max(self.at(i, self.ny - 1).norm());
        }
        for j in 0..self.ny {
            edge = edge.max(self.at(0, j).norm()).max(self.at(self.nx - 1, j).norm());
        }
        edge / peak
    }

    /// Values along the row nearest `y`.
    pub fn row_near(&self, y: f64) -> Vec<Complex64> {
        let j = (((y - self.y_min) / self.dy).round().max(0.0) as usize).min(self.ny - 1);
        self.data[j * self.nx..(j + 1) * self.nx].to_vec()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|a| *a *= s);
        out
    }
}
