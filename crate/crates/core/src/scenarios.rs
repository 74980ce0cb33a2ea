//! Named experiment configurations and their expansion into solver inputs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{field_norm, ComplexField, RealField};
use crate::grid::Grid1D;
use crate::hjfields::{ActionChannels, ActionField, ClosureMode, PotentialSet};
use crate::oscillators::{DualState, OscParams};
use crate::params::DualParams;
use crate::wavesolver::{NonlinearTerm, SectorSource, WaveScenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default = "default_every")]
    pub snapshot_every: usize,
}

fn default_every() -> usize {
    100
}

impl Integration {
    pub fn new(dt: f64, n_steps: usize, snapshot_every: usize) -> Self {
        Integration {
            dt,
            n_steps,
            snapshot_every,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("dt", format!("must be finite and positive, got {}", self.dt)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::config("snapshot_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Initial wavefunction descriptors. Expanded fields are normalized to
/// unit norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `exp(-(x - x0)²/4σ² + i k0 x)`; the density has standard deviation σ.
    Gaussian {
        sigma: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        k0: f64,
    },
    /// `exp(ikx)`; `k` must be a whole multiple of `2π/L`.
    PlaneWave { k: f64 },
    /// Packets at `center ∓ separation/2` moving towards each other with
    /// relative wavenumber `k_rel`, both carried by `exp(i k0 x)`.
    TwoGaussian {
        sigma: f64,
        separation: f64,
        #[serde(default)]
        k_rel: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        k0: f64,
    },
    Samples {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    None,
    /// `½ m0 ω² (x - center)²`.
    Harmonic {
        omega: f64,
        #[serde(default)]
        center: f64,
    },
    Constant { value: f64 },
    /// `a (x² - b²)²`.
    DoubleWell { a: f64, b: f64 },
    Samples { values: Vec<f64> },
}

/// Initial action of one Hamilton–Jacobi channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionInit {
    #[default]
    Zero,
    /// `slope x + offset`.
    Linear {
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Periodic focusing profile `-κ a² (1 - cos(x/a))` with `a = L/2π`,
    /// equal to `-κ x²/2` near the origin.
    Focusing {
        #[serde(default = "one")]
        curvature: f64,
    },
    /// `amplitude · cos(2π mode (x - x_min)/L)`.
    Cosine { amplitude: f64, mode: u32 },
    Samples { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formalism {
    Bateman,
    CaldirolaKanai,
    Dekker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    #[default]
    OwnVelocity,
    SharedVelocitySum,
    Uncoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSpec {
    pub formalism: Formalism,
    #[serde(default = "one")]
    pub mass: f64,
    pub gamma: f64,
    #[serde(default = "one")]
    pub stiffness: f64,
    pub x0: f64,
    #[serde(default)]
    pub v0: f64,
    /// Partner coordinate; defaults to `x0`, `v0`.
    #[serde(default)]
    pub y0: Option<f64>,
    #[serde(default)]
    pub vy0: Option<f64>,
    #[serde(default)]
    pub coupling: CouplingKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjSpec {
    /// One entry per channel; at least two.
    pub channels: Vec<ActionInit>,
    /// Guiding potentials by channel index.
    #[serde(default)]
    pub vg: Vec<PotentialSpec>,
    #[serde(default)]
    pub closure_mode: ClosureMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSpec {
    pub initial: InitialData,
    #[serde(default)]
    pub vg0: PotentialSpec,
    #[serde(default)]
    pub vg1: PotentialSpec,
    #[serde(default)]
    pub vc0: PotentialSpec,
    #[serde(default)]
    pub vc1: PotentialSpec,
    #[serde(default = "symmetric")]
    pub closure_mode: ClosureMode,
    #[serde(default)]
    pub nonlinear_term: NonlinearTerm,
    #[serde(default)]
    pub zeta_override: Option<f64>,
    #[serde(default)]
    pub numeric_closure: bool,
    #[serde(default)]
    pub sector_source: SectorSource,
}

fn symmetric() -> ClosureMode {
    ClosureMode::SymmetricClosure
}

impl WaveSpec {
    pub fn new(initial: InitialData) -> Self {
        WaveSpec {
            initial,
            vg0: PotentialSpec::None,
            vg1: PotentialSpec::None,
            vc0: PotentialSpec::None,
            vc1: PotentialSpec::None,
            closure_mode: ClosureMode::SymmetricClosure,
            nonlinear_term: NonlinearTerm::Auto,
            zeta_override: None,
            numeric_closure: false,
            sector_source: SectorSource::Slaved,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    Oscillator(OscillatorSpec),
    Hj(HjSpec),
    Wave(WaveSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub params: DualParams,
    pub integration: Integration,
    #[serde(flatten)]
    pub kind: ScenarioKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSetup {
    pub formalism: Formalism,
    pub params: OscParams,
    pub state0: DualState,
    pub coupling: CouplingKind,
    pub integration: Integration,
}

#[derive(Debug, Clone)]
pub struct HjSetup {
    pub s0: ActionChannels,
    pub potentials: PotentialSet,
    pub params: DualParams,
    pub integration: Integration,
}

/// Solver-ready inputs.
#[derive(Debug, Clone)]
pub enum Prepared {
    Oscillator(OscillatorSetup),
    Hj(HjSetup),
    Wave(WaveScenario),
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(name, format!("must be finite and positive, got {v}")))
    }
}

fn check_width(name: &str, sigma: f64, grid: &Grid1D) -> Result<()> {
    positive(name, sigma)?;
    if sigma < 4.0 * grid.dx() {
        return Err(Error::config(
            name,
            format!("packet width {sigma} under-resolved (needs >= 4 dx = {})", 4.0 * grid.dx()),
        ));
    }
    Ok(())
}

fn check_wavenumber(name: &str, k: f64, grid: &Grid1D) -> Result<()> {
    let limit = 0.5 * grid.k_nyquist();
    if !k.is_finite() || k.abs() >= limit {
        return Err(Error::config(name, format!("|k| = {k} must be below Nyquist/2 = {limit}")));
    }
    Ok(())
}

fn from_samples(name: &str, grid: Grid1D, values: &[f64]) -> Result<RealField> {
    if values.len() != grid.n_points() {
        return Err(Error::config(
            name,
            format!("{} samples given, grid has {}", values.len(), grid.n_points()),
        ));
    }
    let f = RealField::new(grid, values.to_vec())?;
    f.check_finite("samples")?;
    Ok(f)
}

fn bump(x: f64, sigma: f64) -> f64 {
    (-x * x / (4.0 * sigma * sigma)).exp()
}

/// Unit-norm initial wavefunction.
pub fn expand_initial(init: &InitialData, grid: Grid1D) -> Result<ComplexField> {
    let psi = match *init {
        InitialData::Gaussian { sigma, x0, k0 } => {
            check_width("sigma", sigma, &grid)?;
            check_wavenumber("k0", k0, &grid)?;
            ComplexField::from_fn(grid, |x| Complex64::from_polar(bump(x - x0, sigma), k0 * x))
        }
        InitialData::PlaneWave { k } => {
            check_wavenumber("k", k, &grid)?;
            let mode = k * grid.length() / (2.0 * PI);
            if (mode - mode.round()).abs() > 1e-9 {
                return Err(Error::config(
                    "k",
                    format!("plane wave k = {k} is not periodic on the grid (k L / 2π = {mode})"),
                ));
            }
            ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, k * x))
        }
        InitialData::TwoGaussian {
            sigma,
            separation,
            k_rel,
            center,
            k0,
        } => {
            check_width("sigma", sigma, &grid)?;
            positive("separation", separation)?;
            check_wavenumber("k_rel", k0 + 0.5 * k_rel.abs(), &grid)?;
            check_wavenumber("k_rel", k0 - 0.5 * k_rel.abs(), &grid)?;
            let h = 0.5 * separation;
            ComplexField::from_fn(grid, |x| {
                let left = Complex64::from_polar(bump(x - center + h, sigma), 0.5 * k_rel * (x - center));
                let right = Complex64::from_polar(bump(x - center - h, sigma), -0.5 * k_rel * (x - center));
                (left + right) * Complex64::from_polar(1.0, k0 * x)
            })
        }
        InitialData::Samples { ref re, ref im } => {
            let re = from_samples("initial.re", grid, re)?;
            let im = if im.is_empty() {
                RealField::zeros(grid)
            } else {
                from_samples("initial.im", grid, im)?
            };
            re.zip_map(&im, Complex64::new)?
        }
    };
    let n = field_norm(&psi);
    if n == 0.0 {
        return Err(Error::DegenerateWavefunction);
    }
    Ok(psi.scale(Complex64::new(1.0 / n.sqrt(), 0.0)))
}

/// `None` for an absent potential.
pub fn expand_potential(name: &str, spec: &PotentialSpec, grid: Grid1D, mass: f64) -> Result<Option<RealField>> {
    Ok(match *spec {
        PotentialSpec::None => None,
        PotentialSpec::Harmonic { omega, center } => {
            positive(name, omega)?;
            Some(RealField::from_fn(grid, |x| 0.5 * mass * omega * omega * (x - center).powi(2)))
        }
        PotentialSpec::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::config(name, "constant must be finite"));
            }
            Some(RealField::constant(grid, value))
        }
        PotentialSpec::DoubleWell { a, b } => {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::config(name, "double well parameters must be finite"));
            }
            Some(RealField::from_fn(grid, |x| a * (x * x - b * b).powi(2)))
        }
        PotentialSpec::Samples { ref values } => Some(from_samples(name, grid, values)?),
    })
}

pub fn expand_action(init: &ActionInit, grid: Grid1D) -> Result<ActionField> {
    Ok(match *init {
        ActionInit::Zero => ActionField::zeros(grid),
        ActionInit::Linear { slope, offset } => ActionField::linear(grid, slope, offset),
        ActionInit::Focusing { curvature } => {
            let a = grid.length() / (2.0 * PI);
            ActionField::periodic(RealField::from_fn(grid, |x| -curvature * a * a * (1.0 - (x / a).cos())))
        }
        ActionInit::Cosine { amplitude, mode } => {
            let (x0, l) = (grid.x_min(), grid.length());
            ActionField::periodic(RealField::from_fn(grid, |x| {
                amplitude * (2.0 * PI * mode as f64 * (x - x0) / l).cos()
            }))
        }
        ActionInit::Samples { ref values } => ActionField::periodic(from_samples("channels", grid, values)?),
    })
}

/// Expands `spec` on `grid`; a pure function of its inputs.
pub fn expand(spec: &ScenarioSpec, grid: Grid1D) -> Result<Prepared> {
    let it = spec.integration;
    it.validate()?;
    match &spec.kind {
        ScenarioKind::Oscillator(o) => {
            let params = OscParams::new(o.mass, o.gamma, o.stiffness)?;
            let state0 = DualState::new(o.x0, o.v0, o.y0.unwrap_or(o.x0), o.vy0.unwrap_or(o.v0));
            Ok(Prepared::Oscillator(OscillatorSetup {
                formalism: o.formalism,
                params,
                state0,
                coupling: o.coupling,
                integration: it,
            }))
        }
        ScenarioKind::Hj(h) => {
            let fields = h.channels.iter().map(|c| expand_action(c, grid)).collect::<Result<Vec<_>>>()?;
            if spec.params.masses().len() != fields.len() {
                return Err(Error::config(
                    "params.masses",
                    format!("{} masses for {} channels", spec.params.masses().len(), fields.len()),
                ));
            }
            let s0 = ActionChannels::from_params(fields, &spec.params)?;
            let mut pot = PotentialSet::none().with_mode(h.closure_mode);
            for (n, v) in h.vg.iter().enumerate() {
                if let Some(f) = expand_potential("vg", v, grid, spec.params.mass(n.min(spec.params.masses().len() - 1)))? {
                    pot = pot.with_vg(n, f);
                }
            }
            Ok(Prepared::Hj(HjSetup {
                s0,
                potentials: pot,
                params: spec.params.clone(),
                integration: it,
            }))
        }
        ScenarioKind::Wave(w) => {
            let psi0 = expand_initial(&w.initial, grid)?;
            let m0 = spec.params.m0();
            let mut pot = PotentialSet::none().with_mode(w.closure_mode);
            for (name, n, v, is_vg) in [
                ("vg0", 0, &w.vg0, true),
                ("vg1", 1, &w.vg1, true),
                ("vc0", 0, &w.vc0, false),
                ("vc1", 1, &w.vc1, false),
            ] {
                if let Some(f) = expand_potential(name, v, grid, m0)? {
                    pot = if is_vg { pot.with_vg(n, f) } else { pot.with_vc(n, f) };
                }
            }
            let mut sc = WaveScenario::new(psi0, spec.params.clone())
                .with_potentials(pot)
                .with_steps(it.dt, it.n_steps)
                .with_snapshot_every(it.snapshot_every)
                .with_closure(w.closure_mode)
                .with_nonlinear(w.nonlinear_term)
                .with_numeric_closure(w.numeric_closure)
                .with_sector_source(w.sector_source);
            if let Some(z) = w.zeta_override {
                sc = sc.with_zeta(z);
            }
            sc.validate()?;
            Ok(Prepared::Wave(sc))
        }
    }
}

/// Wavenumber of the `mode`-th Fourier mode on the standard grid.
pub fn standard_mode(mode: u32) -> f64 {
    2.0 * PI * mode as f64 / Grid1D::standard().length()
}

fn wave(name: &str, params: DualParams, it: Integration, spec: WaveSpec) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        params,
        integration: it,
        kind: ScenarioKind::Wave(spec),
    }
}

fn oscillator(name: &str, formalism: Formalism) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        params: DualParams::symmetric_unit(),
        integration: Integration::new(0.01, 1000, 10),
        kind: ScenarioKind::Oscillator(OscillatorSpec {
            formalism,
            mass: 1.0,
            gamma: 0.2,
            stiffness: 1.0,
            x0: 1.0,
            v0: 0.0,
            y0: None,
            vy0: None,
            coupling: CouplingKind::OwnVelocity,
        }),
    }
}

fn hj(name: &str, channels: Vec<ActionInit>, it: Integration) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        params: DualParams::symmetric_unit(),
        integration: it,
        kind: ScenarioKind::Hj(HjSpec {
            channels,
            vg: Vec::new(),
            closure_mode: ClosureMode::Explicit,
        }),
    }
}

/// Built-in scenarios, all on the standard grid.
pub fn builtin_suite() -> Vec<ScenarioSpec> {
    let unit = DualParams::symmetric_unit;
    let gaussian = |sigma: f64, x0: f64, k0: f64| InitialData::Gaussian { sigma, x0, k0 };
    let ten_periods = (20.0 * PI / 1e-3).round() as usize;
    vec![
        wave(
            "free_gaussian_symmetric",
            unit(),
            Integration::new(1e-3, 500, 50),
            WaveSpec::new(gaussian(0.5, 0.0, 0.0)),
        ),
        wave(
            "harmonic_ground_symmetric",
            unit(),
            Integration::new(1e-3, ten_periods, 2000),
            WaveSpec {
                vg0: PotentialSpec::Harmonic { omega: 1.0, center: 0.0 },
                ..WaveSpec::new(gaussian(0.5f64.sqrt(), 0.0, 0.0))
            },
        ),
        wave(
            "double_well_symmetric",
            unit(),
            Integration::new(1e-3, 1000, 100),
            WaveSpec {
                vg0: PotentialSpec::DoubleWell { a: 1.0, b: 1.5 },
                ..WaveSpec::new(gaussian(0.5, 1.5, 0.0))
            },
        ),
        wave(
            "plane_wave_dispersion",
            unit(),
            Integration::new(1e-3, 1000, 100),
            WaveSpec::new(InitialData::PlaneWave { k: standard_mode(6) }),
        ),
        wave(
            "norm_drift_constant_Vg1",
            unit(),
            Integration::new(1e-3, 1000, 100),
            WaveSpec {
                vg1: PotentialSpec::Constant { value: -0.1 },
                ..WaveSpec::new(gaussian(0.7, 0.0, 1.0))
            },
        ),
        wave(
            "residual_mass_plane_wave",
            DualParams::dual(1.0, 1.5, 1.0).expect("valid"),
            Integration::new(2e-4, 5000, 250),
            WaveSpec::new(InitialData::PlaneWave { k: standard_mode(6) }),
        ),
        wave(
            "interference_two_gaussian",
            unit(),
            Integration::new(1e-3, 1000, 100),
            WaveSpec::new(InitialData::TwoGaussian {
                sigma: 0.5,
                separation: 4.0,
                k_rel: 4.0,
                center: 0.0,
                k0: 0.0,
            }),
        ),
        oscillator("bateman_damped", Formalism::Bateman),
        oscillator("ck_damped", Formalism::CaldirolaKanai),
        oscillator("dekker_damped", Formalism::Dekker),
        hj(
            "hj_free_particle",
            vec![ActionInit::Linear { slope: 1.0, offset: 0.0 }, ActionInit::Zero],
            Integration::new(1e-3, 1000, 100),
        ),
        hj(
            "hj_caustic",
            vec![ActionInit::Focusing { curvature: 1.0 }, ActionInit::Zero],
            Integration::new(1e-3, 1500, 100),
        ),
    ]
}

pub fn builtin(name: &str) -> Option<ScenarioSpec> {
    builtin_suite().into_iter().find(|s| s.name == name)
}

pub fn builtin_names() -> Vec<String> {
    builtin_suite().into_iter().map(|s| s.name).collect()
}
