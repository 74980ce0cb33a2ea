//! Fourier-space calculus on the periodic grid.
//!
//! Transforms are unnormalized forward / `1/n`-normalized inverse. FFT plans
//! are cached per thread by `rustfft`'s planner.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ComplexField, Field, RealField, Sample};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

pub fn fft_forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

pub fn fft_inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, true).process(buf);
    let s = 1.0 / n as f64;
    for z in buf.iter_mut() {
        *z *= s;
    }
}

/// Multiply the spectrum of `f` by `multiplier(j, k_j)` and transform back.
pub fn apply_multiplier(
    f: &ComplexField,
    multiplier: impl Fn(usize, f64) -> Complex64,
) -> ComplexField {
    let k = f.grid().wavenumbers();
    let mut buf = f.values().to_vec();
    fft_forward(&mut buf);
    for (j, z) in buf.iter_mut().enumerate() {
        *z *= multiplier(j, k[j]);
    }
    fft_inverse(&mut buf);
    Field::new(*f.grid(), buf).expect("length preserved by FFT")
}

/// Order-th spatial derivative via the discrete Fourier transform.
///
/// The Nyquist mode is dropped for odd orders so real input stays real.
pub fn spectral_derivative<T: Sample>(f: &Field<T>, order: u32) -> Result<Field<T>> {
    if !(1..=2).contains(&order) {
        return Err(Error::DerivativeOrder(order));
    }
    f.check_finite("non-finite field")?;
    let n = f.len();
    // The mean has zero derivative; removing it keeps FFT rounding
    // proportional to the fluctuation rather than the offset.
    let mut z = f.to_complex_field();
    let mean = z.values().iter().sum::<Complex64>() / n as f64;
    for v in z.values_mut() {
        *v -= mean;
    }
    let out = apply_multiplier(&z, |j, k| match order {
        1 if j == n / 2 => Complex64::new(0.0, 0.0),
        1 => Complex64::new(0.0, k),
        _ => Complex64::new(-k * k, 0.0),
    });
    Ok(out.map(T::from_complex))
}

pub fn gradient<T: Sample>(f: &Field<T>) -> Result<Field<T>> {
    spectral_derivative(f, 1)
}

pub fn laplacian<T: Sample>(f: &Field<T>) -> Result<Field<T>> {
    spectral_derivative(f, 2)
}

/// Band-limited translation: returns `g(x) = f(x - a)`.
pub fn spectral_shift(f: &ComplexField, a: f64) -> ComplexField {
    let n = f.len();
    apply_multiplier(f, |j, k| {
        if j == n / 2 {
            Complex64::new((k * a).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, -k * a)
        }
    })
}

/// Fraction of spectral power above `fraction * k_nyquist`, as an RMS ratio
/// `sqrt(P_tail / P_total)`; zero for the zero field.
pub fn spectral_tail(f: &RealField, fraction: f64) -> f64 {
    let k = f.grid().wavenumbers();
    let cut = fraction * f.grid().k_nyquist();
    let mut buf: Vec<Complex64> = f.values().iter().map(|&v| v.to_complex()).collect();
    fft_forward(&mut buf);
    let (mut tail, mut total) = (0.0, 0.0);
    for (z, &kj) in buf.iter().zip(&k) {
        let p = z.norm_sqr();
        total += p;
        if kj.abs() > cut {
            tail += p;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (tail / total).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use std::f64::consts::PI;

    fn unit_circle(n: usize) -> Grid1D {
        Grid1D::new(n, 0.0, 2.0 * PI).unwrap()
    }

    #[test]
    fn derivative_of_sine() {
        let g = unit_circle(64);
        let f = RealField::from_fn(g, f64::sin);
        let d = spectral_derivative(&f, 1).unwrap();
        let err = d
            .values()
            .iter()
            .zip(g.points())
            .map(|(v, x)| (v - x.cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        for n in [8, 64, 1024] {
            let g = Grid1D::new(n, -10.0, 10.0).unwrap();
            let f = RealField::constant(g, 3.7);
            for order in [1, 2] {
                let d = spectral_derivative(&f, order).unwrap();
                assert!(d.max_abs() < 1e-13, "n={n} order={order}: {}", d.max_abs());
            }
        }
    }

    #[test]
    fn second_derivative_of_complex_exponential() {
        let g = unit_circle(64);
        let f = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 3.0 * x));
        let d = spectral_derivative(&f, 2).unwrap();
        for (v, z) in d.values().iter().zip(f.values()) {
            let expect = -9.0 * z;
            assert!((v - expect).norm() / expect.norm() < 1e-10);
        }
    }

    #[test]
    fn order_and_finiteness_checked() {
        let g = unit_circle(8);
        let f = RealField::zeros(g);
        assert_eq!(spectral_derivative(&f, 3), Err(Error::DerivativeOrder(3)));
        let mut bad = f.clone();
        bad.values_mut()[5] = f64::INFINITY;
        assert!(matches!(
            spectral_derivative(&bad, 1),
            Err(Error::NonFinite { index: 5, .. })
        ));
    }

    #[test]
    fn shift_by_whole_cells_matches_roll() {
        let g = Grid1D::new(32, -1.0, 1.0).unwrap();
        let f = ComplexField::from_fn(g, |x| Complex64::new((PI * x).sin(), (2.0 * PI * x).cos()));
        let shifted = spectral_shift(&f, 3.0 * g.dx());
        assert!(shifted.sup_distance(&f.roll(3)).unwrap() < 1e-13);
    }

    #[test]
    fn tail_detects_unresolved_content() {
        let g = unit_circle(64);
        assert!(spectral_tail(&RealField::from_fn(g, f64::sin), 2.0 / 3.0) < 1e-14);
        let rough = RealField::from_fn(g, |x| (30.0 * x).cos());
        assert!(spectral_tail(&rough, 2.0 / 3.0) > 0.99);
        assert_eq!(spectral_tail(&RealField::zeros(g), 0.5), 0.0);
    }
}
