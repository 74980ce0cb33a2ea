//! Fixed-step classical Runge–Kutta integration.

use crate::error::BlowUp;

/// Magnitude beyond which a component is treated as overflow.
pub const OVERFLOW_THRESHOLD: f64 = 1e12;

/// A state vector that RK4 can combine linearly.
pub trait OdeState: Clone {
    /// `self + a * other`
    fn axpy(&self, a: f64, other: &Self) -> Self;
    /// Largest component magnitude; NaN propagates.
    fn max_abs(&self) -> f64;
}

impl<const N: usize> OdeState for [f64; N] {
    fn axpy(&self, a: f64, other: &Self) -> Self {
        std::array::from_fn(|i| self[i] + a * other[i])
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
    }
}

/// One classical RK4 step from `(t, y)`.
pub fn rk4_step<S: OdeState>(rhs: &mut impl FnMut(f64, &S) -> S, t: f64, y: &S, dt: f64) -> S {
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * dt, &y.axpy(0.5 * dt, &k1));
    let k3 = rhs(t + 0.5 * dt, &y.axpy(0.5 * dt, &k2));
    let k4 = rhs(t + dt, &y.axpy(dt, &k3));
    y.axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4)
}

/// Integrates `y' = rhs(t, y)` from `t = 0`, returning `n_steps + 1` states.
///
/// Stops with [`BlowUp`] (carrying the finite prefix of the trajectory) once
/// any component exceeds [`OVERFLOW_THRESHOLD`] or turns non-finite.
pub fn integrate_rk4<S: OdeState>(
    mut rhs: impl FnMut(f64, &S) -> S,
    state0: S,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<S>, BlowUp<Vec<S>>> {
    assert!(dt > 0.0 && dt.is_finite(), "time step must be positive, got {dt}");
    let mut traj = Vec::with_capacity(n_steps + 1);
    traj.push(state0);
    for step in 1..=n_steps {
        let t = (step - 1) as f64 * dt;
        let next = rk4_step(&mut rhs, t, traj.last().expect("non-empty"), dt);
        let m = next.max_abs();
        if !(m <= OVERFLOW_THRESHOLD) {
            return Err(BlowUp {
                step,
                reason: format!("state magnitude {m:e} exceeds {OVERFLOW_THRESHOLD:e}"),
                partial: traj,
            });
        }
        traj.push(next);
    }
    Ok(traj)
}
