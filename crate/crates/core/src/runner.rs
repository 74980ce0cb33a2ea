//! Executes prepared scenarios of any kind.

use crate::error::{Error, Result, RunError};
use crate::field::RealField;
use crate::grid::Grid1D;
use crate::hjfields::{evolve_hj, participation_metric, ActionChannels};
use crate::ode::integrate_rk4;
use crate::oscillators::{
    bateman_rhs, bateman_sector_energies, caldirola_kanai_rhs, ck_hamiltonian, dekker_complex_rhs,
    dekker_sector_energies, underdamped_solution, CkState, DualState, OscParams, OwnVelocity, SharedVelocitySum,
    Uncoupled,
};
use crate::scenarios::{expand, CouplingKind, Formalism, HjSetup, OscillatorSetup, Prepared, ScenarioSpec};
use crate::wavesolver::{evolve, WaveRun, WaveScenario};

/// Oscillator samples at snapshot times. Caldirola–Kanai runs have no
/// partner coordinate and leave `y`, `vy`, `energy_y` as NaN.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OscillatorTrace {
    pub t: Vec<f64>,
    pub states: Vec<DualState>,
    pub energy_x: Vec<f64>,
    pub energy_y: Vec<f64>,
    /// Closed-form damped `(x, v)`; NaN outside the underdamped regime.
    pub exact: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct HjSnapshot {
    pub step: usize,
    pub t: f64,
    pub fields: ActionChannels,
    pub participation: RealField,
    pub max_abs_gradient: f64,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Oscillator(OscillatorTrace),
    Hj(Vec<HjSnapshot>),
    Wave(WaveRun, Box<WaveScenario>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub step: usize,
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub name: String,
    pub grid: Grid1D,
    pub outcome: Outcome,
    /// Set when the run stopped early; `outcome` then holds the prefix.
    pub failure: Option<Failure>,
}

/// Expands and runs `spec`. Configuration problems are errors; mid-run
/// blow-ups are reported through [`Execution::failure`].
pub fn run_spec(spec: &ScenarioSpec, grid: Grid1D) -> Result<Execution> {
    let prepared = expand(spec, grid)?;
    execute(&spec.name, grid, &prepared)
}

pub fn execute(name: &str, grid: Grid1D, prepared: &Prepared) -> Result<Execution> {
    let (outcome, failure) = match prepared {
        Prepared::Oscillator(o) => run_oscillator(o),
        Prepared::Hj(h) => run_hj(h)?,
        Prepared::Wave(sc) => match evolve(sc) {
            Ok(run) => (Outcome::Wave(run, Box::new(sc.clone())), None),
            Err(RunError::Invalid(e)) => return Err(e),
            Err(RunError::BlowUp(b)) => {
                let failure = Failure {
                    step: b.step,
                    t: b.step as f64 * sc.dt,
                    reason: b.reason,
                };
                (Outcome::Wave(b.partial, Box::new(sc.clone())), Some(failure))
            }
        },
    };
    Ok(Execution {
        name: name.to_string(),
        grid,
        outcome,
        failure,
    })
}

fn exact(p: &OscParams, s0: &DualState, t: f64) -> (f64, f64) {
    underdamped_solution(p, s0.x, s0.vx, t).unwrap_or((f64::NAN, f64::NAN))
}

fn run_oscillator(o: &OscillatorSetup) -> (Outcome, Option<Failure>) {
    let p = o.params;
    let it = o.integration;
    let s0 = o.state0;
    let states: std::result::Result<Vec<DualState>, (usize, String, Vec<DualState>)> = match o.formalism {
        Formalism::Bateman => integrate_rk4(|_t, s: &DualState| bateman_rhs(s, &p), s0, it.dt, it.n_steps)
            .map_err(|b| (b.step, b.reason, b.partial)),
        Formalism::Dekker => {
            let rhs = |_t: f64, s: &DualState| match o.coupling {
                CouplingKind::OwnVelocity => dekker_complex_rhs(s, &p, &OwnVelocity { gamma: p.gamma }),
                CouplingKind::SharedVelocitySum => dekker_complex_rhs(s, &p, &SharedVelocitySum { gamma: p.gamma }),
                CouplingKind::Uncoupled => dekker_complex_rhs(s, &p, &Uncoupled),
            };
            integrate_rk4(rhs, s0, it.dt, it.n_steps).map_err(|b| (b.step, b.reason, b.partial))
        }
        Formalism::CaldirolaKanai => {
            let c0 = CkState::from_velocity(s0.x, s0.vx, 0.0, &p);
            let to_dual = |i: usize, c: &CkState| {
                DualState::new(c.x, c.velocity(i as f64 * it.dt, &p), f64::NAN, f64::NAN)
            };
            match integrate_rk4(|t, c: &CkState| caldirola_kanai_rhs(t, c, &p), c0, it.dt, it.n_steps) {
                Ok(v) => Ok(v.iter().enumerate().map(|(i, c)| to_dual(i, c)).collect()),
                Err(b) => Err((
                    b.step,
                    b.reason,
                    b.partial.iter().enumerate().map(|(i, c)| to_dual(i, c)).collect(),
                )),
            }
        }
    };
    let (traj, failure) = match states {
        Ok(v) => (v, None),
        Err((step, reason, partial)) => (
            partial,
            Some(Failure {
                step,
                t: step as f64 * it.dt,
                reason,
            }),
        ),
    };
    let mut trace = OscillatorTrace::default();
    for (i, s) in traj.iter().enumerate() {
        if i % it.snapshot_every != 0 && i != it.n_steps {
            continue;
        }
        let t = i as f64 * it.dt;
        let (ex, ey) = match o.formalism {
            Formalism::Bateman => bateman_sector_energies(s, &p),
            Formalism::Dekker => dekker_sector_energies(s, &p),
            Formalism::CaldirolaKanai => {
                let c = CkState::from_velocity(s.x, s.vx, t, &p);
                (ck_hamiltonian(&c, t, &p), f64::NAN)
            }
        };
        trace.t.push(t);
        trace.states.push(*s);
        trace.energy_x.push(ex);
        trace.energy_y.push(ey);
        trace.exact.push(exact(&p, &s0, t));
    }
    (Outcome::Oscillator(trace), failure)
}

fn hj_snapshot(step: usize, t: f64, fields: &ActionChannels) -> Result<HjSnapshot> {
    let max_abs_gradient = fields
        .gradients()?
        .iter()
        .map(|g| g.max_abs())
        .fold(0.0, f64::max);
    Ok(HjSnapshot {
        step,
        t,
        participation: participation_metric(fields)?,
        fields: fields.clone(),
        max_abs_gradient,
    })
}

fn run_hj(h: &HjSetup) -> Result<(Outcome, Option<Failure>)> {
    let it = h.integration;
    let (traj, failure) = match evolve_hj(h.s0.clone(), &h.potentials, &h.params, it.dt, it.n_steps) {
        Ok(t) => (t, None),
        Err(b) => {
            let f = Failure {
                step: b.step,
                t: b.step as f64 * it.dt,
                reason: b.reason,
            };
            (b.partial, Some(f))
        }
    };
    let mut snaps = Vec::new();
    for (i, s) in traj.iter().enumerate() {
        if i % it.snapshot_every == 0 || i == it.n_steps {
            snaps.push(hj_snapshot(i, i as f64 * it.dt, s)?);
        }
    }
    Ok((Outcome::Hj(snaps), failure))
}

impl Execution {
    pub fn wave(&self) -> Option<&WaveRun> {
        match &self.outcome {
            Outcome::Wave(run, _) => Some(run),
            _ => None,
        }
    }

    pub fn expect_wave(&self) -> Result<&WaveRun> {
        self.wave()
            .ok_or_else(|| Error::config("scenario", format!("`{}` is not a wave scenario", self.name)))
    }
}
