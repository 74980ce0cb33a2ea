//! Finite-dimensional dissipative oscillators: the Bateman doubled pair, the
//! Caldirola–Kanai time-dependent Lagrangian and the complexified (Dekker-type)
//! coordinate `z = x + i y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::OdeState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscParams {
    pub mass: f64,
    pub gamma: f64,
    pub stiffness: f64,
}

impl OscParams {
    pub fn new(mass: f64, gamma: f64, stiffness: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::config("mass", "must be positive"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::config("gamma", "must be non-negative"));
        }
        if !(stiffness > 0.0 && stiffness.is_finite()) {
            return Err(Error::config("stiffness", "must be positive"));
        }
        Ok(OscParams {
            mass,
            gamma,
            stiffness,
        })
    }

    pub fn omega(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    pub fn is_underdamped(&self) -> bool {
        self.gamma < 2.0 * self.omega()
    }

    /// Damped frequency `sqrt(ω² - γ²/4)`, when underdamped.
    pub fn omega_d(&self) -> Option<f64> {
        self.is_underdamped()
            .then(|| (self.omega().powi(2) - 0.25 * self.gamma * self.gamma).sqrt())
    }
}

/// Positions and velocities of a two-coordinate system: the Bateman pair
/// `(x, y)` or the real and imaginary parts of a complex coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
}

impl DualState {
    pub fn new(x: f64, vx: f64, y: f64, vy: f64) -> Self {
        DualState { x, vx, y, vy }
    }

    /// Exchanges the two sectors.
    pub fn swapped(&self) -> Self {
        DualState::new(self.y, self.vy, self.x, self.vx)
    }
}

impl OdeState for DualState {
    fn axpy(&self, a: f64, o: &Self) -> Self {
        DualState::new(
            self.x + a * o.x,
            self.vx + a * o.vx,
            self.y + a * o.y,
            self.vy + a * o.vy,
        )
    }
    fn max_abs(&self) -> f64 {
        [self.x, self.vx, self.y, self.vy].max_abs()
    }
}

/// `(ẋ, -γẋ - ω²x, ẏ, +γẏ - ω²y)`.
pub fn bateman_rhs(s: &DualState, p: &OscParams) -> DualState {
    let w2 = p.omega().powi(2);
    DualState::new(
        s.vx,
        -p.gamma * s.vx - w2 * s.x,
        s.vy,
        p.gamma * s.vy - w2 * s.y,
    )
}

/// Mechanical energies `(E_x, E_y)` of the two Bateman sectors.
pub fn bateman_sector_energies(s: &DualState, p: &OscParams) -> (f64, f64) {
    let e = |q: f64, v: f64| 0.5 * p.mass * v * v + 0.5 * p.stiffness * q * q;
    (e(s.x, s.vx), e(s.y, s.vy))
}

/// Instantaneous `(dE_x/dt, dE_y/dt) = (-γmẋ², +γmẏ²)`.
pub fn bateman_energy_rates(s: &DualState, p: &OscParams) -> (f64, f64) {
    (
        -p.gamma * p.mass * s.vx * s.vx,
        p.gamma * p.mass * s.vy * s.vy,
    )
}

/// Canonical Caldirola–Kanai variables; `p = m ẋ e^{γt}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CkState {
    pub x: f64,
    pub p: f64,
}

impl CkState {
    pub fn from_velocity(x: f64, v: f64, t: f64, params: &OscParams) -> Self {
        CkState {
            x,
            p: params.mass * v * (params.gamma * t).exp(),
        }
    }

    pub fn velocity(&self, t: f64, params: &OscParams) -> f64 {
        self.p * (-params.gamma * t).exp() / params.mass
    }
}

impl OdeState for CkState {
    fn axpy(&self, a: f64, o: &Self) -> Self {
        CkState {
            x: self.x + a * o.x,
            p: self.p + a * o.p,
        }
    }
    fn max_abs(&self) -> f64 {
        [self.x, self.p].max_abs()
    }
}

/// Hamilton's equations for `H = (p²/2m + kx²/2) e^{γt}`.
pub fn caldirola_kanai_rhs(t: f64, s: &CkState, params: &OscParams) -> CkState {
    let g = (params.gamma * t).exp();
    CkState {
        x: s.p / (params.mass * g),
        p: -params.stiffness * s.x * g,
    }
}

pub fn ck_hamiltonian(s: &CkState, t: f64, params: &OscParams) -> f64 {
    (s.p * s.p / (2.0 * params.mass) + 0.5 * params.stiffness * s.x * s.x)
        * (params.gamma * t).exp()
}

/// Cross-coupling of the complexified oscillator.
///
/// Returns `(Γ_x, Γ_y)`; the equations of motion are
/// `ẍ = -ω²x - Γ_x` and `ÿ = -ω²y + Γ_y`.
pub trait CrossCoupling {
    fn terms(&self, s: &DualState) -> (f64, f64);
}

impl<F: Fn(&DualState) -> (f64, f64)> CrossCoupling for F {
    fn terms(&self, s: &DualState) -> (f64, f64) {
        self(s)
    }
}

/// Each sector is coupled through its own velocity: `Γ_x = γẋ`, `Γ_y = γẏ`.
/// Reproduces one damped and one anti-damped coordinate.
#[derive(Debug, Clone, Copy)]
pub struct OwnVelocity {
    pub gamma: f64,
}

impl CrossCoupling for OwnVelocity {
    fn terms(&self, s: &DualState) -> (f64, f64) {
        (self.gamma * s.vx, self.gamma * s.vy)
    }
}

/// A single shared term `Γ = (γ/2)(ẋ + ẏ)` entering both equations.
///
/// The velocity matrix of this coupling is nilpotent, so it produces secular
/// rather than exponential damping.
#[derive(Debug, Clone, Copy)]
pub struct SharedVelocitySum {
    pub gamma: f64,
}

impl CrossCoupling for SharedVelocitySum {
    fn terms(&self, s: &DualState) -> (f64, f64) {
        let g = 0.5 * self.gamma * (s.vx + s.vy);
        (g, g)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Uncoupled;

impl CrossCoupling for Uncoupled {
    fn terms(&self, _s: &DualState) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Mirror image of a coupling under `x ↔ y` with the sign of Γ flipped.
#[derive(Debug, Clone, Copy)]
pub struct Exchanged<C>(pub C);

impl<C: CrossCoupling> CrossCoupling for Exchanged<C> {
    fn terms(&self, s: &DualState) -> (f64, f64) {
        let (gx, gy) = self.0.terms(&s.swapped());
        (-gy, -gx)
    }
}

/// Equations of motion of the complexified coordinate. The potential part
/// follows from `(k/2)(x² - y²)` in the real Lagrangian, whose negative
/// kinetic sign for `y` makes both sectors oscillators.
pub fn dekker_complex_rhs(s: &DualState, p: &OscParams, coupling: &impl CrossCoupling) -> DualState {
    let w2 = p.omega().powi(2);
    let (gx, gy) = coupling.terms(s);
    DualState::new(s.vx, -w2 * s.x - gx, s.vy, -w2 * s.y + gy)
}

/// Sector energies of the real Lagrangian: the `y` sector enters with
/// opposite sign.
pub fn dekker_sector_energies(s: &DualState, p: &OscParams) -> (f64, f64) {
    let e = |q: f64, v: f64| 0.5 * p.mass * v * v + 0.5 * p.stiffness * q * q;
    (e(s.x, s.vx), -e(s.y, s.vy))
}

/// Closed-form `(x, ẋ)` of `ẍ + γẋ + ω²x = 0` in the underdamped regime.
pub fn underdamped_solution(p: &OscParams, x0: f64, v0: f64, t: f64) -> Option<(f64, f64)> {
    let wd = p.omega_d()?;
    let a = 0.5 * p.gamma;
    let b = (v0 + a * x0) / wd;
    let env = (-a * t).exp();
    let (s, c) = (wd * t).sin_cos();
    let x = env * (x0 * c + b * s);
    let v = env * (-a * (x0 * c + b * s) + (-x0 * wd * s + b * wd * c));
    Some((x, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::integrate_rk4;
    use std::f64::consts::PI;

    fn params(gamma: f64) -> OscParams {
        OscParams::new(1.0, gamma, 1.0).unwrap()
    }

    #[test]
    fn underdamped_flag() {
        assert!(params(1.99).is_underdamped());
        assert!(!params(2.0).is_underdamped());
        assert!(params(2.0).omega_d().is_none());
        assert!((params(0.2).omega_d().unwrap() - 0.99f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bateman_undamped_conserves_each_sector() {
        let p = params(0.0);
        let dt = 2.0 * PI / 1000.0;
        let s0 = DualState::new(1.0, 0.0, 0.3, -0.5);
        let traj = integrate_rk4(|_, s| bateman_rhs(s, &p), s0, dt, 100_000).unwrap();
        let (ex0, ey0) = bateman_sector_energies(&s0, &p);
        for s in traj.iter().step_by(997) {
            let (ex, ey) = bateman_sector_energies(s, &p);
            assert!((ex - ex0).abs() < 1e-8 && (ey - ey0).abs() < 1e-8);
        }
    }

    #[test]
    fn bateman_matches_closed_form() {
        let p = params(0.2);
        let dt = 0.01;
        let traj = integrate_rk4(|_, s| bateman_rhs(s, &p), DualState::new(1.0, 0.0, 1.0, 0.0), dt, 1000)
            .unwrap();
        let wd = 0.99f64.sqrt();
        let t: f64 = 10.0;
        let exact = (-0.1 * t).exp() * ((wd * t).cos() + 0.1 / wd * (wd * t).sin());
        assert!((traj[1000].x - exact).abs() < 1e-6);
        assert!((underdamped_solution(&p, 1.0, 0.0, t).unwrap().0 - exact).abs() < 1e-14);
    }

    #[test]
    fn reversed_y_satisfies_damped_equation() {
        let p = params(0.2);
        let dt = 1e-3;
        let n = 5000;
        let traj =
            integrate_rk4(|_, s| bateman_rhs(s, &p), DualState::new(0.4, 1.0, 0.4, 1.0), dt, n).unwrap();
        // x̃(t) = y(T - t): x̃' = -ẏ, x̃'' = ÿ (from finite-differenced velocity).
        let rev: Vec<_> = traj.iter().rev().collect();
        for i in (1..n).step_by(37) {
            let pos = rev[i].y;
            let vel = -rev[i].vy;
            let acc = (-rev[i + 1].vy + rev[i - 1].vy) / (2.0 * dt);
            let residual = acc + p.gamma * vel + p.omega().powi(2) * pos;
            assert!(residual.abs() < 1e-6, "residual {residual:e} at {i}");
        }
    }

    #[test]
    fn ck_hamiltonian_at_zero_is_mechanical_energy() {
        let p = params(0.3);
        let s = CkState::from_velocity(0.7, -1.2, 0.0, &p);
        let mech = 0.5 * 1.2 * 1.2 + 0.5 * 0.7 * 0.7;
        assert!((ck_hamiltonian(&s, 0.0, &p) - mech).abs() < 1e-15);
    }

    #[test]
    fn ck_conservative_limit() {
        let p = params(0.0);
        let dt = 0.01;
        let s0 = CkState::from_velocity(1.0, 0.5, 0.0, &p);
        let h0 = ck_hamiltonian(&s0, 0.0, &p);
        let traj = integrate_rk4(|t, s| caldirola_kanai_rhs(t, s, &p), s0, dt, 5000).unwrap();
        for (i, s) in traj.iter().enumerate() {
            assert!((ck_hamiltonian(s, i as f64 * dt, &p) - h0).abs() < 1e-8);
        }
    }

    #[test]
    fn ck_agrees_with_bateman_x_sector() {
        let p = params(0.2);
        let dt = 0.01;
        let bat = integrate_rk4(|_, s| bateman_rhs(s, &p), DualState::new(1.0, 0.0, 0.0, 0.0), dt, 1000)
            .unwrap();
        let ck = integrate_rk4(
            |t, s| caldirola_kanai_rhs(t, s, &p),
            CkState::from_velocity(1.0, 0.0, 0.0, &p),
            dt,
            1000,
        )
        .unwrap();
        for (b, c) in bat.iter().zip(&ck) {
            assert!((b.x - c.x).abs() < 1e-8);
        }
    }

    #[test]
    fn dekker_uncoupled_sectors_conserve_opposite_energies() {
        let p = params(0.0);
        let dt = 2.0 * PI / 1000.0;
        let s0 = DualState::new(1.0, 0.0, 0.5, 0.2);
        let traj = integrate_rk4(|_, s| dekker_complex_rhs(s, &p, &Uncoupled), s0, dt, 20_000).unwrap();
        let (ex0, ey0) = dekker_sector_energies(&s0, &p);
        assert!(ex0 > 0.0 && ey0 < 0.0);
        for s in &traj {
            let (ex, ey) = dekker_sector_energies(s, &p);
            assert!((ex - ex0).abs() < 1e-8 && (ey - ey0).abs() < 1e-8);
        }
    }

    /// Slope of ln|x| at successive local maxima of |x|.
    fn envelope_rate(xs: &[f64], dt: f64) -> f64 {
        let peaks: Vec<(f64, f64)> = (1..xs.len() - 1)
            .filter(|&i| xs[i].abs() > xs[i - 1].abs() && xs[i].abs() >= xs[i + 1].abs())
            .map(|i| (i as f64 * dt, xs[i].abs().ln()))
            .collect();
        let n = peaks.len() as f64;
        let (mt, my) = peaks.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
        let cov: f64 = peaks.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
        let var: f64 = peaks.iter().map(|(t, _)| (t - mt).powi(2)).sum();
        cov / var
    }

    #[test]
    fn dekker_x_sector_decays_at_half_gamma() {
        let p = params(0.2);
        let coupling = OwnVelocity { gamma: p.gamma };
        let dt = 0.01 / 10.0;
        let n = (10.0 * 2.0 * PI / dt) as usize;
        let traj = integrate_rk4(
            |_, s| dekker_complex_rhs(s, &p, &coupling),
            DualState::new(1.0, 0.0, 1.0, 0.0),
            dt,
            n,
        )
        .unwrap();
        let xs: Vec<f64> = traj.iter().map(|s| s.x).collect();
        let ys: Vec<f64> = traj.iter().map(|s| s.y).collect();
        let rate = envelope_rate(&xs, dt);
        assert!((rate + 0.1).abs() < 0.02 * 0.1, "rate = {rate}");
        let anti = envelope_rate(&ys, dt);
        assert!((anti - 0.1).abs() < 0.02 * 0.1, "anti-damped rate = {anti}");
    }

    #[test]
    fn shared_velocity_sum_does_not_damp() {
        // u = x + y is a free oscillator under this coupling.
        let p = params(0.2);
        let c = SharedVelocitySum { gamma: p.gamma };
        let traj = integrate_rk4(
            |_, s| dekker_complex_rhs(s, &p, &c),
            DualState::new(1.0, 0.0, 1.0, 0.0),
            0.01,
            3000,
        )
        .unwrap();
        for (i, s) in traj.iter().enumerate() {
            let t = i as f64 * 0.01;
            assert!((s.x + s.y - 2.0 * t.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn exchange_swaps_trajectories_bitwise() {
        let p = params(0.2);
        let c = OwnVelocity { gamma: p.gamma };
        let s0 = DualState::new(1.0, -0.3, 0.25, 0.8);
        let a = integrate_rk4(|_, s| dekker_complex_rhs(s, &p, &c), s0, 0.01, 2000).unwrap();
        let b = integrate_rk4(
            |_, s| dekker_complex_rhs(s, &p, &Exchanged(c)),
            s0.swapped(),
            0.01,
            2000,
        )
        .unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(*u, v.swapped());
        }
    }

    #[test]
    fn all_three_formalisms_agree_on_x() {
        let p = params(0.2);
        let dt = 0.01;
        let n = 1000;
        let bat = integrate_rk4(|_, s| bateman_rhs(s, &p), DualState::new(1.0, 0.0, 1.0, 0.0), dt, n)
            .unwrap();
        let c = OwnVelocity { gamma: p.gamma };
        let dek = integrate_rk4(
            |_, s| dekker_complex_rhs(s, &p, &c),
            DualState::new(1.0, 0.0, 1.0, 0.0),
            dt,
            n,
        )
        .unwrap();
        let ck = integrate_rk4(
            |t, s| caldirola_kanai_rhs(t, s, &p),
            CkState::from_velocity(1.0, 0.0, 0.0, &p),
            dt,
            n,
        )
        .unwrap();
        for i in 0..=n {
            assert!((bat[i].x - dek[i].x).abs() < 1e-8);
            assert!((bat[i].x - ck[i].x).abs() < 1e-8);
        }
    }
}
