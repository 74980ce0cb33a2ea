//! Coupled Hamilton–Jacobi dynamics of a system action `S0` and its
//! environment channels `S1..SN`.

use serde::{Deserialize, Serialize};

use crate::error::{BlowUp, Error, Result};
use crate::field::RealField;
use crate::grid::Grid1D;
use crate::ode::{rk4_step, OdeState};
use crate::params::DualParams;
use crate::spectral::{gradient, laplacian, spectral_tail};

/// Gradient magnitude treated as a caustic.
pub const GRADIENT_LIMIT: f64 = 1e6;
/// Relative RMS of gradient spectrum above `TAIL_FRACTION * k_nyquist`
/// beyond which the field is considered unresolved (characteristics crossing).
pub const TAIL_LIMIT: f64 = 1e-4;
pub const TAIL_FRACTION: f64 = 2.0 / 3.0;

/// An action field `S(x) = slope * (x - x_min) + periodic(x)`.
///
/// Only the periodic part is differentiated spectrally, so a uniform
/// momentum (a linear ramp) is represented exactly on the periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionField {
    samples: RealField,
    slope: f64,
}

impl ActionField {
    pub fn periodic(samples: RealField) -> Self {
        ActionField { samples, slope: 0.0 }
    }

    /// Full samples of `S` together with its mean gradient.
    pub fn with_slope(samples: RealField, slope: f64) -> Self {
        ActionField { samples, slope }
    }

    pub fn linear(grid: Grid1D, slope: f64, offset: f64) -> Self {
        ActionField {
            samples: RealField::from_fn(grid, |x| offset + slope * x),
            slope,
        }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        ActionField::periodic(RealField::zeros(grid))
    }

    pub fn samples(&self) -> &RealField {
        &self.samples
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn grid(&self) -> &Grid1D {
        self.samples.grid()
    }

    pub fn periodic_part(&self) -> RealField {
        let g = *self.grid();
        let x0 = g.x_min();
        let mut out = self.samples.clone();
        for (i, v) in out.values_mut().iter_mut().enumerate() {
            *v -= self.slope * (g.x(i) - x0);
        }
        out
    }

    pub fn gradient(&self) -> Result<RealField> {
        let mut d = gradient(&self.periodic_part())?;
        for v in d.values_mut() {
            *v += self.slope;
        }
        Ok(d)
    }

    pub fn laplacian(&self) -> Result<RealField> {
        laplacian(&self.periodic_part())
    }

    /// Periodic translation by whole cells: `S'(x) = S(x - cells*dx)`.
    pub fn translate_cells(&self, cells: isize) -> Self {
        let g = *self.grid();
        let mut out = self.periodic_part().roll(cells);
        let x0 = g.x_min();
        let shift = cells as f64 * g.dx();
        for (i, v) in out.values_mut().iter_mut().enumerate() {
            *v += self.slope * (g.x(i) - x0 - shift);
        }
        ActionField::with_slope(out, self.slope)
    }

    fn axpy(&self, a: f64, rate: &ActionField) -> ActionField {
        let samples = self
            .samples
            .axpy(a, &rate.samples)
            .expect("channels share a grid");
        ActionField {
            samples,
            slope: self.slope + a * rate.slope,
        }
    }
}

/// Action fields `S0..SN` with their masses, aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionChannels {
    channels: Vec<ActionField>,
    masses: Vec<f64>,
}

impl ActionChannels {
    pub fn new(channels: Vec<ActionField>, masses: Vec<f64>) -> Result<Self> {
        if channels.len() < 2 {
            return Err(Error::config(
                "channels",
                format!("need a system and at least one environment channel, got {}", channels.len()),
            ));
        }
        if channels.len() != masses.len() {
            return Err(Error::config(
                "masses",
                format!("{} channels but {} masses", channels.len(), masses.len()),
            ));
        }
        if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::config("masses", "all masses must be positive"));
        }
        let g = *channels[0].grid();
        if channels.iter().any(|c| *c.grid() != g) {
            return Err(Error::GridMismatch);
        }
        Ok(ActionChannels { channels, masses })
    }

    /// Takes masses from `params`, which must have one per channel.
    pub fn from_params(channels: Vec<ActionField>, params: &DualParams) -> Result<Self> {
        ActionChannels::new(channels, params.masses().to_vec())
    }

    pub fn channels(&self) -> &[ActionField] {
        &self.channels
    }

    pub fn channel(&self, n: usize) -> &ActionField {
        &self.channels[n]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn grid(&self) -> &Grid1D {
        self.channels[0].grid()
    }

    pub fn environment_count(&self) -> usize {
        self.channels.len() - 1
    }

    pub fn gradients(&self) -> Result<Vec<RealField>> {
        self.channels.iter().map(ActionField::gradient).collect()
    }

    pub fn translate_cells(&self, cells: isize) -> Self {
        ActionChannels {
            channels: self.channels.iter().map(|c| c.translate_cells(cells)).collect(),
            masses: self.masses.clone(),
        }
    }

    fn with_channels(&self, channels: Vec<ActionField>) -> Self {
        ActionChannels {
            channels,
            masses: self.masses.clone(),
        }
    }
}

impl OdeState for ActionChannels {
    fn axpy(&self, a: f64, other: &Self) -> Self {
        self.with_channels(
            self.channels
                .iter()
                .zip(&other.channels)
                .map(|(s, r)| s.axpy(a, r))
                .collect(),
        )
    }

    fn max_abs(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.samples().values())
            .fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureMode {
    /// Coupling potentials are taken from the stored arrays.
    #[default]
    Explicit,
    /// `V_c0 = (ħ/4m)∇²S1`, `V_c1 = -(ħ/4m)∇²S0`, recomputed on every
    /// evaluation; stored arrays are ignored.
    SymmetricClosure,
}

/// Guiding potentials `V_g` and coupling potentials `V_c` per channel.
/// Missing entries are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PotentialSet {
    pub vg: Vec<Option<RealField>>,
    pub vc: Vec<Option<RealField>>,
    pub mode: ClosureMode,
}

impl PotentialSet {
    pub fn none() -> Self {
        PotentialSet::default()
    }

    pub fn symmetric() -> Self {
        PotentialSet {
            mode: ClosureMode::SymmetricClosure,
            ..Default::default()
        }
    }

    pub fn with_mode(mut self, mode: ClosureMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_vg(mut self, n: usize, v: RealField) -> Self {
        set_slot(&mut self.vg, n, v);
        self
    }

    pub fn with_vc(mut self, n: usize, v: RealField) -> Self {
        set_slot(&mut self.vc, n, v);
        self
    }

    pub fn vg(&self, n: usize) -> Option<&RealField> {
        self.vg.get(n).and_then(Option::as_ref)
    }

    pub fn vc(&self, n: usize) -> Option<&RealField> {
        self.vc.get(n).and_then(Option::as_ref)
    }

    fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        let all = self.vg.iter().chain(&self.vc).flatten();
        for f in all {
            if f.grid() != grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(())
    }
}

fn set_slot(slots: &mut Vec<Option<RealField>>, n: usize, v: RealField) {
    if slots.len() <= n {
        slots.resize(n + 1, None);
    }
    slots[n] = Some(v);
}

fn value_at(f: Option<&RealField>, i: usize) -> f64 {
    f.map_or(0.0, |f| f.values()[i])
}

/// Coupling potentials of the symmetric closure for channels 0 and 1.
pub fn symmetric_closure_potentials(
    s0: &ActionField,
    s1: &ActionField,
    hbar: f64,
    reduced_mass: f64,
) -> Result<(RealField, RealField)> {
    let c = hbar / (4.0 * reduced_mass);
    Ok((s1.laplacian()?.scale(c), s0.laplacian()?.scale(-c)))
}

fn coupling_fields(
    s: &ActionChannels,
    pot: &PotentialSet,
    params: &DualParams,
) -> Result<Vec<Option<RealField>>> {
    match pot.mode {
        ClosureMode::Explicit => Ok((0..s.len()).map(|n| pot.vc(n).cloned()).collect()),
        ClosureMode::SymmetricClosure => {
            let m = 1.0 / (1.0 / s.masses[0] + 1.0 / s.masses[1]);
            let (vc0, vc1) = symmetric_closure_potentials(s.channel(0), s.channel(1), params.hbar(), m)?;
            let mut out = vec![Some(vc0), Some(vc1)];
            out.resize(s.len(), None);
            Ok(out)
        }
    }
}

fn check_rates(rates: &[RealField]) -> Result<()> {
    for r in rates {
        r.check_finite("field blow-up")?;
    }
    Ok(())
}

/// Time derivatives of the dual (two-channel) system.
pub fn hj_rhs_dual(s: &ActionChannels, pot: &PotentialSet, params: &DualParams) -> Result<[RealField; 2]> {
    if s.len() != 2 {
        return Err(Error::config("channels", format!("dual system needs 2 channels, got {}", s.len())));
    }
    pot.check_grid(s.grid())?;
    let g0 = s.channel(0).gradient()?;
    let g1 = s.channel(1).gradient()?;
    let vc = coupling_fields(s, pot, params)?;
    let (m0, m1) = (s.masses[0], s.masses[1]);
    let grid = *s.grid();
    let mut r0 = RealField::zeros(grid);
    let mut r1 = RealField::zeros(grid);
    for i in 0..grid.n_points() {
        let (a, b) = (g0.values()[i], g1.values()[i]);
        let sum = 0.0 + b * b / (2.0 * m1);
        r0.values_mut()[i] = -(a * a / (2.0 * m0) - sum
            + value_at(pot.vg(0), i)
            + value_at(vc[0].as_ref(), i));
        r1.values_mut()[i] = -(a * b / (2.0 * m0)
            + a * b / (2.0 * m1)
            + value_at(pot.vg(1), i)
            + value_at(vc[1].as_ref(), i));
    }
    let rates = [r0, r1];
    check_rates(&rates)?;
    Ok(rates)
}

/// Time derivatives of the multi-channel system; the environment sum in
/// the system equation runs over `∇S_n·∇S_n / 2m_n`.
pub fn hj_rhs_multi(s: &ActionChannels, pot: &PotentialSet, params: &DualParams) -> Result<Vec<RealField>> {
    pot.check_grid(s.grid())?;
    let grads = s.gradients()?;
    let vc = coupling_fields(s, pot, params)?;
    let grid = *s.grid();
    let m0 = s.masses[0];
    let mut rates = vec![RealField::zeros(grid); s.len()];
    for i in 0..grid.n_points() {
        let a = grads[0].values()[i];
        let mut sum = 0.0;
        for n in 1..s.len() {
            let b = grads[n].values()[i];
            sum += b * b / (2.0 * s.masses[n]);
        }
        rates[0].values_mut()[i] =
            -(a * a / (2.0 * m0) - sum + value_at(pot.vg(0), i) + value_at(vc[0].as_ref(), i));
        for n in 1..s.len() {
            let b = grads[n].values()[i];
            rates[n].values_mut()[i] = -(a * b / (2.0 * m0)
                + a * b / (2.0 * s.masses[n])
                + value_at(pot.vg(n), i)
                + value_at(vc[n].as_ref(), i));
        }
    }
    check_rates(&rates)?;
    Ok(rates)
}

fn rates_as_channels(s: &ActionChannels, rates: Vec<RealField>) -> ActionChannels {
    s.with_channels(rates.into_iter().map(ActionField::periodic).collect())
}

fn nan_rates(s: &ActionChannels) -> ActionChannels {
    let grid = *s.grid();
    s.with_channels(vec![ActionField::periodic(RealField::constant(grid, f64::NAN)); s.len()])
}

/// Why a state can no longer be evolved smoothly, if it cannot.
pub fn caustic_check(s: &ActionChannels) -> Option<String> {
    let grads = match s.gradients() {
        Ok(g) => g,
        Err(e) => return Some(e.to_string()),
    };
    for (n, g) in grads.iter().enumerate() {
        if let Err(e) = g.check_finite("gradient") {
            return Some(format!("channel {n}: {e}"));
        }
        let m = g.max_abs();
        if m > GRADIENT_LIMIT {
            return Some(format!("channel {n}: max |grad S| = {m:e} exceeds {GRADIENT_LIMIT:e}"));
        }
    }
    let scale = grads
        .iter()
        .map(|g| (g.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64).sqrt())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for (n, g) in grads.iter().enumerate() {
        let rms = (g.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64).sqrt();
        let tail = spectral_tail(g, TAIL_FRACTION) * rms;
        if tail > TAIL_LIMIT * scale {
            return Some(format!(
                "channel {n}: gradient no longer resolved (spectral tail {:.3e})",
                tail / scale
            ));
        }
    }
    None
}

/// RK4 in time with spectral gradients; `n_steps + 1` states on success.
///
/// Aborts with the partial trajectory once a caustic forms: a gradient
/// above [`GRADIENT_LIMIT`], non-finite values, or gradients whose spectrum
/// reaches the grid cutoff.
pub fn evolve_hj(
    s0: ActionChannels,
    pot: &PotentialSet,
    params: &DualParams,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<ActionChannels>, BlowUp<Vec<ActionChannels>>> {
    assert!(dt > 0.0 && dt.is_finite(), "time step must be positive, got {dt}");
    let mut rhs = |_t: f64, s: &ActionChannels| match hj_rhs_multi(s, pot, params) {
        Ok(r) => rates_as_channels(s, r),
        Err(_) => nan_rates(s),
    };
    let mut traj = vec![s0];
    if let Some(reason) = caustic_check(&traj[0]) {
        return Err(BlowUp { step: 0, reason, partial: traj });
    }
    for step in 1..=n_steps {
        let t = (step - 1) as f64 * dt;
        let next = rk4_step(&mut rhs, t, traj.last().expect("non-empty"), dt);
        if let Some(reason) = caustic_check(&next) {
            return Err(BlowUp {
                step,
                reason: format!("caustic/blow-up detected at step {step}: {reason}"),
                partial: traj,
            });
        }
        traj.push(next);
    }
    Ok(traj)
}

/// `W(x) = Σ_{μ≥1} (∂S_μ)²`; the system channel does not contribute.
pub fn participation_metric(s: &ActionChannels) -> Result<RealField> {
    let grid = *s.grid();
    let mut w = RealField::zeros(grid);
    for c in &s.channels[1..] {
        let g = c.gradient()?;
        for (wi, gi) in w.values_mut().iter_mut().zip(g.values()) {
            *wi += gi * gi;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(128, -PI, PI).unwrap()
    }

    fn unit() -> DualParams {
        DualParams::symmetric_unit()
    }

    fn pair(s0: ActionField, s1: ActionField, m0: f64, m1: f64) -> ActionChannels {
        ActionChannels::new(vec![s0, s1], vec![m0, m1]).unwrap()
    }

    fn smooth(g: Grid1D, a: f64, b: f64, c: f64) -> ActionField {
        ActionField::periodic(RealField::from_fn(g, |x| a * x.sin() + b * (2.0 * x).cos() + c * (3.0 * x + 0.4).sin()))
    }

    #[test]
    fn channel_validation() {
        let g = grid();
        assert!(ActionChannels::new(vec![ActionField::zeros(g)], vec![1.0]).is_err());
        assert!(ActionChannels::new(vec![ActionField::zeros(g); 2], vec![1.0]).is_err());
        let other = Grid1D::new(64, -PI, PI).unwrap();
        assert_eq!(
            ActionChannels::new(vec![ActionField::zeros(g), ActionField::zeros(other)], vec![1.0, 1.0]),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn linear_field_gradient_is_exact() {
        let f = ActionField::linear(grid(), 2.5, -1.0);
        let err = f.gradient().unwrap().values().iter().map(|v| (v - 2.5).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err:e}");
        assert!(f.laplacian().unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn decoupled_limit() {
        let g = grid();
        let s0 = smooth(g, 1.0, 0.3, 0.1);
        let vg0 = RealField::from_fn(g, |x| x.cos());
        let vg1 = RealField::from_fn(g, |x| 0.5 * (2.0 * x).sin());
        let pot = PotentialSet::none().with_vg(0, vg0.clone()).with_vg(1, vg1.clone());
        let s = pair(s0.clone(), ActionField::zeros(g), 1.3, 0.7);
        let [r0, r1] = hj_rhs_dual(&s, &pot, &unit()).unwrap();
        let grad = s0.gradient().unwrap();
        for i in 0..g.n_points() {
            let expect0 = -(grad.values()[i].powi(2) / 2.6 + vg0.values()[i]);
            assert!((r0.values()[i] - expect0).abs() < 1e-12);
            assert!((r1.values()[i] + vg1.values()[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn free_particle_residual_vanishes() {
        let g = grid();
        let p = 1.7;
        let s = pair(ActionField::linear(g, p, 0.0), ActionField::zeros(g), 1.0, 1.0);
        let [r0, _] = hj_rhs_dual(&s, &PotentialSet::none(), &unit()).unwrap();
        // ∂S0/∂t + (∇S0)²/2m0 = 0 for S0 = p x - p²t/2m0
        for v in r0.values() {
            assert!((v + p * p / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn exchanging_channels_is_not_a_symmetry_of_the_rhs() {
        // Regression values pinned from a trusted evaluation on sample index 17.
        let g = Grid1D::new(32, -PI, PI).unwrap();
        let a = smooth(g, 1.0, 0.5, 0.0);
        let b = smooth(g, -0.3, 0.0, 0.8);
        let fwd = hj_rhs_dual(&pair(a.clone(), b.clone(), 1.0, 2.0), &PotentialSet::none(), &unit()).unwrap();
        let rev = hj_rhs_dual(&pair(b, a, 2.0, 1.0), &PotentialSet::none(), &unit()).unwrap();
        let i = 17;
        let x = g.x(i);
        let ga = x.cos() - (2.0 * x).sin();
        let gb = -0.3 * x.cos() + 2.4 * (3.0 * x + 0.4).cos();
        let f0 = -(ga * ga / 2.0 - gb * gb / 4.0);
        let f1 = -(ga * gb / 2.0 + ga * gb / 4.0);
        let r0 = -(gb * gb / 4.0 - ga * ga / 2.0);
        assert!((fwd[0].values()[i] - f0).abs() < 1e-12);
        assert!((fwd[1].values()[i] - f1).abs() < 1e-12);
        assert!((rev[0].values()[i] - r0).abs() < 1e-12);
        assert!((fwd[0].values()[i] - rev[0].values()[i]).abs() > 1e-3);
    }

    #[test]
    fn multi_reduces_to_dual_bitwise() {
        let g = grid();
        let s = pair(smooth(g, 1.0, 0.2, -0.4), smooth(g, 0.1, -0.7, 0.3), 0.8, 1.9);
        let pot = PotentialSet::none()
            .with_vg(0, RealField::from_fn(g, |x| x * x.cos()))
            .with_vc(1, RealField::from_fn(g, |x| (x).sin()));
        let dual = hj_rhs_dual(&s, &pot, &unit()).unwrap();
        let multi = hj_rhs_multi(&s, &pot, &unit()).unwrap();
        assert_eq!(dual.to_vec(), multi);
        let sym = pot.with_mode(ClosureMode::SymmetricClosure);
        assert_eq!(hj_rhs_dual(&s, &sym, &unit()).unwrap().to_vec(), hj_rhs_multi(&s, &sym, &unit()).unwrap());
    }

    #[test]
    fn constant_channels_are_stationary() {
        let g = grid();
        let chans = (0..4).map(|n| ActionField::periodic(RealField::constant(g, n as f64 - 1.5))).collect();
        let s = ActionChannels::new(chans, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        for r in hj_rhs_multi(&s, &PotentialSet::none(), &unit()).unwrap() {
            assert!(r.max_abs() < 1e-13);
        }
    }

    #[test]
    fn linear_channels_by_hand() {
        let g = grid();
        let a = [0.5, -1.0, 2.0, 0.25];
        let m = [1.0, 2.0, 0.5, 4.0];
        let chans = a.iter().map(|&s| ActionField::linear(g, s, 0.3)).collect();
        let s = ActionChannels::new(chans, m.to_vec()).unwrap();
        let r = hj_rhs_multi(&s, &PotentialSet::none(), &unit()).unwrap();
        let env: f64 = (1..4).map(|n| a[n] * a[n] / (2.0 * m[n])).sum();
        let expect0 = -(a[0] * a[0] / (2.0 * m[0]) - env);
        assert!(r[0].values().iter().all(|v| (v - expect0).abs() < 1e-12));
        for n in 1..4 {
            let e = -(a[0] * a[n] / (2.0 * m[0]) + a[0] * a[n] / (2.0 * m[n]));
            assert!(r[n].values().iter().all(|v| (v - e).abs() < 1e-12));
        }
    }

    #[test]
    fn symmetric_closure_recomputes_couplings() {
        let g = grid();
        let s = pair(smooth(g, 1.0, 0.0, 0.0), smooth(g, 0.0, 1.0, 0.0), 1.0, 1.0);
        // stored arrays are ignored in closure mode
        let junk = RealField::constant(g, 100.0);
        let pot = PotentialSet::symmetric().with_vc(0, junk.clone()).with_vc(1, junk);
        let [r0, r1] = hj_rhs_dual(&s, &pot, &unit()).unwrap();
        let bare = hj_rhs_dual(&s, &PotentialSet::none(), &unit()).unwrap();
        // m = 1/2 so ħ/4m = 1/2; ∇²S1 = -4 cos 2x, ∇²S0 = -sin x
        for i in 0..g.n_points() {
            let x = g.x(i);
            let vc0 = 0.5 * (-4.0 * (2.0 * x).cos());
            let vc1 = -0.5 * (-x.sin());
            assert!((r0.values()[i] - (bare[0].values()[i] - vc0)).abs() < 1e-11);
            assert!((r1.values()[i] - (bare[1].values()[i] - vc1)).abs() < 1e-11);
        }
    }

    #[test]
    fn free_particle_evolution_is_exact() {
        let g = Grid1D::standard();
        let p = 1.0;
        let s = pair(ActionField::linear(g, p, 0.0), ActionField::zeros(g), 1.0, 1.0);
        let traj = evolve_hj(s, &PotentialSet::none(), &unit(), 1e-3, 1000).unwrap();
        let end = traj.last().unwrap().channel(0);
        for (i, v) in end.samples().values().iter().enumerate() {
            let exact = p * g.x(i) - p * p / 2.0;
            assert!((v - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn uniform_potential_drives_uniform_action() {
        let g = grid();
        let v0 = 0.75;
        let s = pair(ActionField::zeros(g), ActionField::zeros(g), 1.0, 1.0);
        let pot = PotentialSet::none().with_vg(0, RealField::constant(g, v0));
        let traj = evolve_hj(s, &pot, &unit(), 0.01, 200).unwrap();
        let t = 2.0;
        assert!(traj[200].channel(0).samples().values().iter().all(|v| (v + v0 * t).abs() < 1e-12));
    }

    #[test]
    fn focusing_data_forms_caustic_near_unit_time() {
        let g = Grid1D::standard();
        let a = g.length() / (2.0 * PI);
        // periodic analogue of -x²/2: ∇S0 = -a sin(x/a), focusing at t = m0/1
        let s0 = ActionField::periodic(RealField::from_fn(g, |x| a * a * ((x / a).cos() - 1.0)));
        let s = pair(s0, ActionField::zeros(g), 1.0, 1.0);
        let err = evolve_hj(s, &PotentialSet::none(), &unit(), 1e-3, 1500).unwrap_err();
        let t = err.step as f64 * 1e-3;
        assert!((0.8..=1.0).contains(&t), "caustic at t = {t}: {}", err.reason);
        assert_eq!(err.partial.len(), err.step);
    }

    #[test]
    fn participation_examples() {
        let g = grid();
        let s = pair(smooth(g, 1.0, 1.0, 1.0), ActionField::periodic(RealField::constant(g, 4.0)), 1.0, 1.0);
        assert!(participation_metric(&s).unwrap().max_abs() < 1e-13);
        let s = pair(smooth(g, 1.0, 1.0, 1.0), ActionField::linear(g, -1.5, 2.0), 1.0, 1.0);
        assert!(participation_metric(&s).unwrap().values().iter().all(|w| (w - 2.25).abs() < 1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn translation_equivariance(c in prop::array::uniform3(-1.0f64..1.0),
                                    d in prop::array::uniform3(-1.0f64..1.0),
                                    slope in -2.0f64..2.0, cells in -5isize..5) {
            let g = Grid1D::new(64, -PI, PI).unwrap();
            let mut s0 = smooth(g, c[0], c[1], c[2]);
            s0 = ActionField::with_slope(
                s0.samples().zip_map(&RealField::from_fn(g, |x| slope * (x + PI)), |a, b| a + b).unwrap(),
                slope,
            );
            let s = ActionChannels::new(vec![s0, smooth(g, d[0], d[1], d[2]), smooth(g, d[2], d[0], c[1])],
                                        vec![1.0, 0.6, 1.7]).unwrap();
            let pot = PotentialSet::symmetric().with_vg(0, RealField::from_fn(g, |x| x.cos()));
            let shifted_pot = PotentialSet::symmetric().with_vg(0, pot.vg(0).unwrap().roll(cells));
            let a = hj_rhs_multi(&s, &pot, &unit()).unwrap();
            let b = hj_rhs_multi(&s.translate_cells(cells), &shifted_pot, &unit()).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!(u.roll(cells).zip_map(v, |p, q| p - q).unwrap().max_abs() < 1e-12);
            }
        }

        #[test]
        fn additive_constants_do_not_matter(c in prop::array::uniform3(-1.0f64..1.0),
                                            k in prop::array::uniform3(-50.0f64..50.0)) {
            let g = Grid1D::new(64, -PI, PI).unwrap();
            let chans: Vec<_> = (0..3).map(|n| smooth(g, c[n], c[(n + 1) % 3], 0.2)).collect();
            let lifted: Vec<_> = chans.iter().zip(k).map(|(f, k)| {
                ActionField::periodic(f.samples().map(|v| v + k))
            }).collect();
            let m = vec![1.0, 2.0, 0.5];
            let pot = PotentialSet::none().with_vg(1, RealField::from_fn(g, |x| x.sin()));
            let a = hj_rhs_multi(&ActionChannels::new(chans, m.clone()).unwrap(), &pot, &unit()).unwrap();
            let b = hj_rhs_multi(&ActionChannels::new(lifted, m).unwrap(), &pot, &unit()).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!(u.zip_map(v, |p, q| p - q).unwrap().max_abs() < 1e-12);
            }
        }

        #[test]
        fn participation_invariances(c in prop::array::uniform3(-1.0f64..1.0), k in -20.0f64..20.0) {
            let g = Grid1D::new(64, -PI, PI).unwrap();
            let e1 = smooth(g, c[0], c[1], 0.0);
            let e2 = smooth(g, 0.0, c[2], c[0]);
            let sys = smooth(g, 1.0, 0.0, 0.0);
            let base = ActionChannels::new(vec![sys.clone(), e1.clone(), e2.clone()], vec![1.0; 3]).unwrap();
            let perm = ActionChannels::new(vec![sys.clone(), e2.clone(), e1.clone()], vec![1.0; 3]).unwrap();
            let lifted = ActionChannels::new(
                vec![sys, ActionField::periodic(e1.samples().map(|v| v + k)), e2], vec![1.0; 3]).unwrap();
            let w = participation_metric(&base).unwrap();
            prop_assert!(w.values().iter().all(|&v| v >= 0.0));
            prop_assert!(w.zip_map(&participation_metric(&perm).unwrap(), |a, b| a - b).unwrap().max_abs() < 1e-12);
            prop_assert!(w.zip_map(&participation_metric(&lifted).unwrap(), |a, b| a - b).unwrap().max_abs() < 1e-12);
        }
    }
}
