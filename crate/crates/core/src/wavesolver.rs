//! Split-step integration of the generalized dissipative wave equation
//!
//! ```text
//! iζ ∂ψ/∂t = -(ζ²/4m)∇²ψ + V_g0 ψ + (V_c0 - (ζ/4m)∇²S1) ψ
//!            + (ζ²/4m̄)(ψ*∇·(∇ψ/ψ*) - ∇²ψ)
//!            + i V_g1 ψ + i (V_c1 + (ζ/4m)∇²S0) ψ
//! ```
//!
//! with reduced mass `m` and residual mass `m̄`, plus an independent
//! reference solver for the linear Schrödinger equation.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, SnapshotReport};
use crate::error::{BlowUp, Error, Result, RunError};
use crate::field::{ComplexField, RealField};
use crate::hjfields::{evolve_hj, ActionChannels, ActionField, ClosureMode, PotentialSet};
use crate::madelung::{from_wavefunction, UnwrapPolicy, Warning};
use crate::ode::OVERFLOW_THRESHOLD;
use crate::params::DualParams;
use crate::spectral::{apply_multiplier, gradient, laplacian};

/// Whether the residual-mass term is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearTerm {
    On,
    Off,
    /// On exactly when `1/m̄ ≠ 0`.
    #[default]
    Auto,
}

/// Where the action fields entering the coupling terms come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorSource {
    /// Extracted from ψ at every evaluation.
    #[default]
    Slaved,
    /// Integrated alongside ψ by the Hamilton–Jacobi equations.
    CoEvolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveScenario {
    pub psi0: ComplexField,
    pub params: DualParams,
    /// `vg[0]`, `vg[1]` and, in explicit mode, `vc[0]`, `vc[1]`.
    pub potentials: PotentialSet,
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_every: usize,
    pub closure_mode: ClosureMode,
    pub nonlinear_term: NonlinearTerm,
    pub zeta_override: Option<f64>,
    /// Evaluate the closure cancellation numerically instead of dropping it.
    pub numeric_closure: bool,
    pub sector_source: SectorSource,
    pub unwrap: UnwrapPolicy,
}

impl WaveScenario {
    /// Symmetric closure, no potentials, `dt = 1e-3`, 1000 steps.
    pub fn new(psi0: ComplexField, params: DualParams) -> Self {
        WaveScenario {
            psi0,
            params,
            potentials: PotentialSet::none(),
            dt: 1e-3,
            n_steps: 1000,
            snapshot_every: 100,
            closure_mode: ClosureMode::SymmetricClosure,
            nonlinear_term: NonlinearTerm::Auto,
            zeta_override: None,
            numeric_closure: false,
            sector_source: SectorSource::Slaved,
            unwrap: UnwrapPolicy::default(),
        }
    }

    pub fn with_potentials(mut self, potentials: PotentialSet) -> Self {
        self.potentials = potentials;
        self
    }

    pub fn with_steps(mut self, dt: f64, n_steps: usize) -> Self {
        self.dt = dt;
        self.n_steps = n_steps;
        self
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn with_closure(mut self, mode: ClosureMode) -> Self {
        self.closure_mode = mode;
        self
    }

    pub fn with_nonlinear(mut self, term: NonlinearTerm) -> Self {
        self.nonlinear_term = term;
        self
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta_override = Some(zeta);
        self
    }

    pub fn with_numeric_closure(mut self, on: bool) -> Self {
        self.numeric_closure = on;
        self
    }

    pub fn with_sector_source(mut self, source: SectorSource) -> Self {
        self.sector_source = source;
        self
    }

    /// Action quantum used by the solver.
    pub fn zeta(&self) -> f64 {
        self.zeta_override.unwrap_or_else(|| self.params.zeta())
    }

    pub fn vg(&self, n: usize) -> Option<&RealField> {
        self.potentials.vg(n)
    }

    pub fn nonlinear_active(&self) -> bool {
        match self.nonlinear_term {
            NonlinearTerm::On => true,
            NonlinearTerm::Off => false,
            NonlinearTerm::Auto => self.params.inverse_residual_mass() != 0.0,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn rhs_options(&self) -> RhsOptions {
        RhsOptions {
            closure: self.closure_mode,
            numeric_closure: self.numeric_closure,
            nonlinear: self.nonlinear_term,
            zeta: self.zeta_override,
            amplitude_floor: self.unwrap.amplitude_floor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = *self.psi0.grid();
        self.psi0.check_finite("initial wavefunction")?;
        if self.psi0.max_abs() == 0.0 {
            return Err(Error::DegenerateWavefunction);
        }
        for f in self.potentials.vg.iter().chain(&self.potentials.vc).flatten() {
            if *f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            f.check_finite("potential")?;
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("dt", format!("must be finite and positive, got {}", self.dt)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::config("snapshot_every", "must be at least 1"));
        }
        if let Some(z) = self.zeta_override {
            if !(z.is_finite() && z > 0.0) {
                return Err(Error::config("zeta", format!("must be finite and positive, got {z}")));
            }
        }
        if self.nonlinear_active() {
            let rate = self.zeta() * grid.k_nyquist().powi(2) * self.params.inverse_residual_mass().abs() / 4.0;
            if self.dt * rate >= 0.5 {
                return Err(Error::config(
                    "dt",
                    format!(
                        "residual-mass substep unstable: dt * ζ k_max² / 4|m̄| = {:.3} (must be < 0.5)",
                        self.dt * rate
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Switches shared by [`generalized_rhs`] and the stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsOptions {
    pub closure: ClosureMode,
    pub numeric_closure: bool,
    pub nonlinear: NonlinearTerm,
    pub zeta: Option<f64>,
    pub amplitude_floor: f64,
}

impl Default for RhsOptions {
    fn default() -> Self {
        RhsOptions {
            closure: ClosureMode::SymmetricClosure,
            numeric_closure: false,
            nonlinear: NonlinearTerm::Auto,
            zeta: None,
            amplitude_floor: UnwrapPolicy::default().amplitude_floor,
        }
    }
}

/// Laplacians of the two action fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorLaplacians {
    pub lap_s0: RealField,
    pub lap_s1: RealField,
    /// Samples where the amplitude floor was used.
    pub floored: usize,
}

impl SectorLaplacians {
    /// From `∇² ln ψ = ψ''/ψ - (ψ'/ψ)² = (i∇²S0 - ∇²S1)/ζ`.
    ///
    /// Working with ψ, which is periodic even when `S0` carries a net
    /// winding, avoids differentiating non-periodic samples.
    pub fn from_wavefunction(psi: &ComplexField, zeta: f64, amplitude_floor: f64) -> Result<Self> {
        let d1 = gradient(psi)?;
        let d2 = laplacian(psi)?;
        let floor2 = (amplitude_floor * psi.max_abs()).powi(2);
        let mut floored = 0;
        let n = psi.len();
        let mut s0 = Vec::with_capacity(n);
        let mut s1 = Vec::with_capacity(n);
        for i in 0..n {
            let z = psi.values()[i];
            let r2 = z.norm_sqr();
            let inv = if r2 >= floor2 && r2 > 0.0 {
                z.conj() / r2
            } else {
                floored += 1;
                if floor2 > 0.0 {
                    z.conj() / floor2
                } else {
                    Complex64::new(0.0, 0.0)
                }
            };
            let q = d1.values()[i] * inv;
            let l = d2.values()[i] * inv - q * q;
            s0.push(zeta * l.im);
            s1.push(-zeta * l.re);
        }
        let grid = *psi.grid();
        Ok(SectorLaplacians {
            lap_s0: RealField::new(grid, s0)?,
            lap_s1: RealField::new(grid, s1)?,
            floored,
        })
    }

    pub fn from_actions(s0: &ActionField, s1: &ActionField) -> Result<Self> {
        Ok(SectorLaplacians {
            lap_s0: s0.laplacian()?,
            lap_s1: s1.laplacian()?,
            floored: 0,
        })
    }
}

fn floored_conj(z: Complex64, floor: f64) -> Complex64 {
    let r = z.norm();
    if r >= floor {
        z.conj()
    } else if r == 0.0 {
        Complex64::new(floor, 0.0)
    } else {
        z.conj() * (floor / r)
    }
}

/// `ψ*∇·(∇ψ/ψ*) - ∇²ψ`, evaluated spectrally with `ψ*` in the quotient
/// floored at `floor` in modulus.
pub fn residual_mass_bracket(psi: &ComplexField, floor: f64) -> Result<ComplexField> {
    let d = gradient(psi)?;
    let q = d.zip_map(psi, |dz, z| dz / floored_conj(z, floor))?;
    let dq = gradient(&q)?;
    let lap = laplacian(psi)?;
    let outer = psi.zip_map(&dq, |z, w| z.conj() * w)?;
    outer.zip_map(&lap, |a, b| a - b)
}

/// Pointwise coefficient `c` of the multiplicative terms, `iζ∂ψ/∂t ⊃ cψ`.
fn multiplicative_coefficient(
    grid: crate::grid::Grid1D,
    pot: &PotentialSet,
    closure: ClosureMode,
    numeric_closure: bool,
    sectors: Option<&SectorLaplacians>,
    zeta: f64,
    reduced_mass: f64,
) -> ComplexField {
    let n = grid.n_points();
    let at = |f: Option<&RealField>, i: usize| f.map_or(0.0, |f| f.values()[i]);
    let kc = zeta / (4.0 * reduced_mass);
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        let mut re = at(pot.vg(0), i);
        let mut im = at(pot.vg(1), i);
        match (closure, sectors) {
            (ClosureMode::Explicit, Some(s)) => {
                re += at(pot.vc(0), i) - kc * s.lap_s1.values()[i];
                im += at(pot.vc(1), i) + kc * s.lap_s0.values()[i];
            }
            (ClosureMode::Explicit, None) => {
                re += at(pot.vc(0), i);
                im += at(pot.vc(1), i);
            }
            (ClosureMode::SymmetricClosure, Some(s)) if numeric_closure => {
                let vc0 = kc * s.lap_s1.values()[i];
                let vc1 = -kc * s.lap_s0.values()[i];
                re += vc0 - kc * s.lap_s1.values()[i];
                im += vc1 + kc * s.lap_s0.values()[i];
            }
            (ClosureMode::SymmetricClosure, _) => {}
        }
        c.push(Complex64::new(re, im));
    }
    ComplexField::new(grid, c).expect("grid-sized")
}

fn needs_sectors(closure: ClosureMode, numeric_closure: bool) -> bool {
    closure == ClosureMode::Explicit || numeric_closure
}

/// Time derivative `∂ψ/∂t` of the generalized wave equation.
///
/// When `sectors` is `None` and the closure needs action Laplacians they are
/// extracted from ψ; an engaged amplitude floor is reported as a warning.
pub fn generalized_rhs(
    psi: &ComplexField,
    sectors: Option<&SectorLaplacians>,
    params: &DualParams,
    pot: &PotentialSet,
    opts: &RhsOptions,
) -> Result<(ComplexField, Vec<Warning>)> {
    psi.check_finite("wavefunction")?;
    let zeta = opts.zeta.unwrap_or_else(|| params.zeta());
    let m = params.reduced_mass();
    let mut warnings = Vec::new();
    let extracted;
    let sectors = match sectors {
        Some(s) => Some(s),
        None if needs_sectors(opts.closure, opts.numeric_closure) => {
            extracted = SectorLaplacians::from_wavefunction(psi, zeta, opts.amplitude_floor)?;
            if extracted.floored > 0 {
                warnings.push(Warning::AmplitudeFloor { points: extracted.floored });
            }
            Some(&extracted)
        }
        None => None,
    };
    let c = multiplicative_coefficient(*psi.grid(), pot, opts.closure, opts.numeric_closure, sectors, zeta, m);
    let mut h = laplacian(psi)?.scale(Complex64::new(-zeta * zeta / (4.0 * m), 0.0));
    h = h.zip_map(&c.zip_map(psi, |a, b| a * b)?, |a, b| a + b)?;
    let inv_mbar = params.inverse_residual_mass();
    let active = match opts.nonlinear {
        NonlinearTerm::On => true,
        NonlinearTerm::Off => false,
        NonlinearTerm::Auto => inv_mbar != 0.0,
    };
    if active {
        let b = residual_mass_bracket(psi, opts.amplitude_floor * psi.max_abs())?;
        h = h.axpy(Complex64::new(zeta * zeta * inv_mbar / 4.0, 0.0), &b)?;
    }
    let out = h.scale(Complex64::new(0.0, -1.0 / zeta));
    out.check_finite("non-finite rhs")?;
    Ok((out, warnings))
}

/// Strang splitting: exact half kinetic steps in Fourier space around a
/// pointwise step for the multiplicative and residual-mass terms.
#[derive(Debug, Clone)]
pub struct SplitStepper {
    half_kinetic: Vec<Complex64>,
    potentials: PotentialSet,
    closure: ClosureMode,
    numeric_closure: bool,
    nonlinear: bool,
    zeta: f64,
    reduced_mass: f64,
    inv_mbar: f64,
    dt: f64,
    amplitude_floor: f64,
    /// Coefficient when it does not depend on ψ.
    fixed: Option<ComplexField>,
}

impl SplitStepper {
    pub fn new(sc: &WaveScenario) -> Result<Self> {
        sc.validate()?;
        let grid = *sc.psi0.grid();
        let zeta = sc.zeta();
        let m = sc.params.reduced_mass();
        let half_kinetic = grid
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(1.0, -zeta * k * k / (4.0 * m) * (0.5 * sc.dt)))
            .collect();
        let fixed = (!needs_sectors(sc.closure_mode, sc.numeric_closure)).then(|| {
            multiplicative_coefficient(grid, &sc.potentials, sc.closure_mode, false, None, zeta, m)
        });
        Ok(SplitStepper {
            half_kinetic,
            potentials: sc.potentials.clone(),
            closure: sc.closure_mode,
            numeric_closure: sc.numeric_closure,
            nonlinear: sc.nonlinear_active(),
            zeta,
            reduced_mass: m,
            inv_mbar: sc.params.inverse_residual_mass(),
            dt: sc.dt,
            amplitude_floor: sc.unwrap.amplitude_floor,
            fixed,
        })
    }

    fn kinetic_half(&self, psi: &ComplexField) -> ComplexField {
        apply_multiplier(psi, |j, _| self.half_kinetic[j])
    }

    fn coefficient(
        &self,
        psi: &ComplexField,
        sectors: Option<&SectorLaplacians>,
        floored: &mut usize,
    ) -> Result<ComplexField> {
        if let Some(c) = &self.fixed {
            return Ok(c.clone());
        }
        let extracted;
        let s = match sectors {
            Some(s) => s,
            None => {
                extracted = SectorLaplacians::from_wavefunction(psi, self.zeta, self.amplitude_floor)?;
                *floored = (*floored).max(extracted.floored);
                &extracted
            }
        };
        Ok(multiplicative_coefficient(
            *psi.grid(),
            &self.potentials,
            self.closure,
            self.numeric_closure,
            Some(s),
            self.zeta,
            self.reduced_mass,
        ))
    }

    fn rotate(&self, psi: &ComplexField, c: &ComplexField, tau: f64) -> ComplexField {
        let s = tau / self.zeta;
        psi.zip_map(c, |z, c| z * (Complex64::new(0.0, -s) * c).exp())
            .expect("same grid")
    }

    /// Residual-mass contribution to the coefficient, through the identity
    /// `ψ*∇·(∇ψ/ψ*) - ∇²ψ = -|∇ψ|²ψ/|ψ|²`. The quotient form aliases at
    /// twice the carrier wavenumber and destabilizes long runs.
    fn add_nonlinear(&self, psi: &ComplexField, c: &mut ComplexField) -> Result<()> {
        let d = gradient(psi)?;
        let floor2 = (self.amplitude_floor * psi.max_abs()).powi(2);
        let s = -self.zeta * self.zeta * self.inv_mbar / 4.0;
        for ((ci, z), dz) in c.values_mut().iter_mut().zip(psi.values()).zip(d.values()) {
            ci.re += s * dz.norm_sqr() / z.norm_sqr().max(floor2);
        }
        Ok(())
    }

    fn full_coefficient(
        &self,
        psi: &ComplexField,
        sectors: Option<&SectorLaplacians>,
        floored: &mut usize,
    ) -> Result<ComplexField> {
        let mut c = self.coefficient(psi, sectors, floored)?;
        if self.nonlinear {
            self.add_nonlinear(psi, &mut c)?;
        }
        Ok(c)
    }

    /// Advances ψ by one step. `sectors`, when given, are held fixed over
    /// the step; otherwise they are re-extracted from ψ as needed. Returns
    /// the new state and the largest count of floored samples.
    ///
    /// The pointwise part is `iζ∂ψ/∂t = c(ψ)ψ`. A ψ-independent `c` is
    /// applied exactly; otherwise `c` is re-evaluated at the midpoint
    /// (exponential midpoint rule).
    pub fn step(&self, psi: &ComplexField, sectors: Option<&SectorLaplacians>) -> Result<(ComplexField, usize)> {
        let mut floored = 0;
        let dt = self.dt;
        let psi = self.kinetic_half(psi);
        let c0 = self.full_coefficient(&psi, sectors, &mut floored)?;
        let depends = self.nonlinear || (self.fixed.is_none() && sectors.is_none());
        let psi = if depends {
            let half = self.rotate(&psi, &c0, 0.5 * dt);
            let c_mid = self.full_coefficient(&half, sectors, &mut floored)?;
            self.rotate(&psi, &c_mid, dt)
        } else {
            self.rotate(&psi, &c0, dt)
        };
        let psi = self.kinetic_half(&psi);
        psi.check_finite("field blow-up")?;
        Ok((psi, floored))
    }
}

/// One split step of `scenario` from `psi`.
pub fn step_splitstep(psi: &ComplexField, scenario: &WaveScenario) -> Result<ComplexField> {
    Ok(SplitStepper::new(scenario)?.step(psi, None)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub psi: ComplexField,
}

#[derive(Debug, Clone, Default)]
pub struct WaveRun {
    pub snapshots: Vec<Snapshot>,
    pub reports: Vec<SnapshotReport>,
    /// First occurrences, keyed by step.
    pub warnings: Vec<(usize, Warning)>,
}

impl WaveRun {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a run holds the initial snapshot")
    }
}

const MAX_WARNINGS: usize = 32;

/// Integrates a scenario, recording snapshots with diagnostics at step 0,
/// every `snapshot_every` steps and at the final step.
pub fn evolve(sc: &WaveScenario) -> std::result::Result<WaveRun, RunError<WaveRun>> {
    let stepper = SplitStepper::new(sc)?;
    let mut run = WaveRun::default();
    let first = Snapshot {
        step: 0,
        t: 0.0,
        psi: sc.psi0.clone(),
    };
    run.reports.push(diagnostics::report(&first, None, sc)?);
    run.snapshots.push(first);

    let mut actions = match sc.sector_source {
        SectorSource::Slaved => None,
        SectorSource::CoEvolved => {
            let params = DualParams::dual(sc.params.m0(), sc.params.m1(), sc.zeta())?;
            let pair = from_wavefunction(&sc.psi0, &params, &sc.unwrap)?;
            let s = ActionChannels::from_params(vec![pair.s0, ActionField::periodic(pair.s1)], &params)?;
            let pot = sc.potentials.clone().with_mode(sc.closure_mode);
            Some((s, pot, params))
        }
    };

    let mut psi = sc.psi0.clone();
    let mut floored_seen = false;
    for step in 1..=sc.n_steps {
        let sectors = actions.as_ref().map(|(s, _, _)| SectorLaplacians::from_actions(s.channel(0), s.channel(1)))
        .transpose();
        let outcome = sectors.and_then(|sec| stepper.step(&psi, sec.as_ref()));
        let (next, floored) = match outcome {
            Ok(v) => v,
            Err(e) => return Err(blow_up(run, step, e.to_string())),
        };
        if floored > 0 && !floored_seen && run.warnings.len() < MAX_WARNINGS {
            floored_seen = true;
            run.warnings.push((step, Warning::AmplitudeFloor { points: floored }));
        }
        let m = next.max_abs();
        if m > OVERFLOW_THRESHOLD {
            return Err(blow_up(run, step, format!("|ψ| = {m:e} exceeds {OVERFLOW_THRESHOLD:e}")));
        }
        if let Some((s, pot, params)) = &mut actions {
            match evolve_hj(s.clone(), pot, params, sc.dt, 1) {
                Ok(mut traj) => *s = traj.pop().expect("two states"),
                Err(e) => return Err(blow_up(run, step, e.reason)),
            }
        }
        psi = next;
        if step % sc.snapshot_every == 0 || step == sc.n_steps {
            let snap = Snapshot {
                step,
                t: step as f64 * sc.dt,
                psi: psi.clone(),
            };
            let report = match diagnostics::report(&snap, run.snapshots.last(), sc) {
                Ok(r) => r,
                Err(e) => return Err(blow_up(run, step, e.to_string())),
            };
            run.snapshots.push(snap);
            run.reports.push(report);
        }
    }
    Ok(run)
}

fn blow_up(partial: WaveRun, step: usize, reason: String) -> RunError<WaveRun> {
    RunError::BlowUp(BlowUp { step, reason, partial })
}

/// Independent split-step solver for `iζ∂ψ/∂t = -(ζ²/2m)∇²ψ + Vψ`.
///
/// Shares no code with [`SplitStepper`] beyond the field containers.
pub fn schrodinger_reference(
    psi0: &ComplexField,
    vg0: Option<&RealField>,
    mass: f64,
    zeta: f64,
    dt: f64,
    n_steps: usize,
    snapshot_every: usize,
) -> Result<Vec<Snapshot>> {
    let grid = *psi0.grid();
    if let Some(v) = vg0 {
        psi0.same_grid(v)?;
    }
    for (name, v) in [("mass", mass), ("zeta", zeta), ("dt", dt)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::config(name, format!("must be finite and positive, got {v}")));
        }
    }
    if snapshot_every == 0 {
        return Err(Error::config("snapshot_every", "must be at least 1"));
    }
    let n = grid.n_points();
    let mut planner = FftPlanner::<f64>::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(n);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(n);
    let dk = 2.0 * std::f64::consts::PI / grid.length();
    let norm = 1.0 / n as f64;
    let kinetic: Vec<Complex64> = (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let k = m * dk;
            Complex64::from_polar(norm, -(zeta * k * k / (2.0 * mass)) * (dt / 2.0))
        })
        .collect();
    let potential: Vec<Complex64> = match vg0 {
        Some(v) => v.values().iter().map(|&v| Complex64::from_polar(1.0, -v * dt / zeta)).collect(),
        None => vec![Complex64::new(1.0, 0.0); n],
    };
    let mut buf = psi0.values().to_vec();
    let half = |buf: &mut Vec<Complex64>| {
        fwd.process(buf);
        for (z, f) in buf.iter_mut().zip(&kinetic) {
            *z *= f;
        }
        inv.process(buf);
    };
    let mut out = vec![Snapshot {
        step: 0,
        t: 0.0,
        psi: psi0.clone(),
    }];
    for step in 1..=n_steps {
        half(&mut buf);
        for (z, p) in buf.iter_mut().zip(&potential) {
            *z *= p;
        }
        half(&mut buf);
        if let Some(i) = buf.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::BlowUp {
                step,
                reason: format!("non-finite value at index {i}"),
            });
        }
        if step % snapshot_every == 0 || step == n_steps {
            out.push(Snapshot {
                step,
                t: step as f64 * dt,
                psi: ComplexField::new(grid, buf.clone())?,
            });
        }
    }
    Ok(out)
}
