use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Samples of a function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid1D,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

/// Scalar types a field can hold.
pub trait Sample: Copy + Send + Sync + 'static {
    fn is_finite_sample(&self) -> bool;
    fn magnitude(&self) -> f64;
    fn to_complex(self) -> Complex64;
    fn from_complex(z: Complex64) -> Self;
}

impl Sample for f64 {
    fn is_finite_sample(&self) -> bool {
        self.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
}

impl Sample for Complex64 {
    fn is_finite_sample(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
}

impl<T: Sample> Field<T> {
    pub fn new(grid: Grid1D, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                found: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> T) -> Self {
        let values = grid.points().map(f).collect();
        Field { grid, values }
    }

    pub fn constant(grid: Grid1D, c: T) -> Self {
        Field {
            grid,
            values: vec![c; grid.n_points()],
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<U: Sample>(&self, mut f: impl FnMut(T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<U: Sample, V: Sample>(
        &self,
        other: &Field<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<Field<V>> {
        self.same_grid(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn same_grid<U>(&self, other: &Field<U>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite_sample()) {
            Some(index) => Err(Error::NonFinite { context, index }),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    /// Periodic shift by `cells` grid points: `out[i] = self[i - cells]`.
    pub fn roll(&self, cells: isize) -> Self {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|i| self.values[(i - cells).rem_euclid(n) as usize])
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    pub fn to_complex_field(&self) -> ComplexField {
        self.map(Sample::to_complex)
    }
}

impl RealField {
    pub fn zeros(grid: Grid1D) -> Self {
        Field::constant(grid, 0.0)
    }

    /// Rectangle-rule integral `Σ f_i dx`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn axpy(&self, a: f64, other: &RealField) -> Result<Self> {
        self.zip_map(other, |u, v| u + a * v)
    }
}

impl ComplexField {
    pub fn zeros(grid: Grid1D) -> Self {
        Field::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn density(&self) -> RealField {
        self.map(|z| z.norm_sqr())
    }

    pub fn modulus(&self) -> RealField {
        self.map(|z| z.norm())
    }

    pub fn re(&self) -> RealField {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|z| z.im)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map(|v| a * v)
    }

    pub fn axpy(&self, a: Complex64, other: &ComplexField) -> Result<Self> {
        self.zip_map(other, |u, v| u + a * v)
    }

    /// Largest pointwise modulus of the difference.
    pub fn sup_distance(&self, other: &ComplexField) -> Result<f64> {
        Ok(self.zip_map(other, |a, b| a - b)?.max_abs())
    }
}

/// `Σ |f_i|² dx` on the periodic grid.
pub fn field_norm(f: &ComplexField) -> f64 {
    f.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * f.grid().dx()
}
