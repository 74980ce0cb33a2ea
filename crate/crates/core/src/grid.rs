use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[x_min, x_max)` with a power-of-two sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct Grid1D {
    n_points: usize,
    x_min: f64,
    x_max: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridParams {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl TryFrom<GridParams> for Grid1D {
    type Error = Error;
    fn try_from(p: GridParams) -> Result<Self> {
        Grid1D::new(p.n_points, p.x_min, p.x_max)
    }
}

impl From<Grid1D> for GridParams {
    fn from(g: Grid1D) -> Self {
        GridParams {
            n_points: g.n_points,
            x_min: g.x_min,
            x_max: g.x_max,
        }
    }
}

impl Grid1D {
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 2, got {n_points}"
            )));
        }
        if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max})"
            )));
        }
        Ok(Grid1D {
            n_points,
            x_min,
            x_max,
        })
    }

    /// The default simulation box: 1024 points on `[-10, 10)`.
    pub fn standard() -> Self {
        Grid1D {
            n_points: 1024,
            x_min: -10.0,
            x_max: 10.0,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Angular wavenumbers in FFT order: `0, 1, .., n/2 - 1, -n/2, .., -1`
    /// times `2π/L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let base = 2.0 * PI / self.length();
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j } else { j - n };
                base * m as f64
            })
            .collect()
    }

    /// Largest representable |k| (the Nyquist wavenumber `π/dx`).
    pub fn k_nyquist(&self) -> f64 {
        PI / self.dx()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid1D::new(1000, 0.0, 1.0).is_err());
        assert!(Grid1D::new(1, 0.0, 1.0).is_err());
        assert!(Grid1D::new(64, 1.0, 1.0).is_err());
        assert!(Grid1D::new(64, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn samples_and_wavenumbers() {
        let g = Grid1D::new(8, 0.0, 2.0 * PI).unwrap();
        assert_eq!(g.dx(), 2.0 * PI / 8.0);
        assert_eq!(g.x(0), 0.0);
        let k = g.wavenumbers();
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert_eq!(g.k_nyquist(), 4.0);
    }
}
