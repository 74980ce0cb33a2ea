//! Forward and inverse Madelung maps between action fields and
//! wavefunctions, `ψ = exp(iS0/ħ - S1/ħ)`, and the quaternionic composition
//! of additional environment channels.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid1D;
use crate::hjfields::{ActionChannels, ActionField};
use crate::params::DualParams;
use crate::quaternion::Quaternion;

/// Regularization of the inverse map near zeros of ψ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnwrapPolicy {
    /// Amplitude floor relative to `max |ψ|`.
    pub amplitude_floor: f64,
    /// Index where the unwrapped phase equals its principal value.
    pub reference_index: usize,
    /// Adjacent wrapped phase differences at least this large are reported
    /// as probable aliasing.
    pub alias_threshold: f64,
}

impl Default for UnwrapPolicy {
    fn default() -> Self {
        UnwrapPolicy {
            amplitude_floor: 1e-12,
            reference_index: 0,
            alias_threshold: 0.9 * PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `points` samples fell below the amplitude floor.
    AmplitudeFloor { points: usize },
    /// Adjacent phase jump of `jump` radians between `index - 1` and `index`.
    PhaseAliasing { index: usize, jump: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::AmplitudeFloor { points } => {
                write!(f, "amplitude floor engaged at {points} points")
            }
            Warning::PhaseAliasing { index, jump } => {
                write!(f, "phase aliasing at index {index} (jump {jump:.3} rad)")
            }
        }
    }
}

/// `ψ = exp(i S0/ħ - S1/ħ)` pointwise.
pub fn to_wavefunction(s0: &RealField, s1: &RealField, params: &DualParams) -> Result<ComplexField> {
    let hbar = params.hbar();
    s0.zip_map(s1, |a, b| Complex64::from_polar((-b / hbar).exp(), a / hbar))
}

fn wrap(d: f64) -> f64 {
    // into (-π, π]
    let w = d - 2.0 * PI * (d / (2.0 * PI)).round();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Unwrapped phase of `psi` anchored at `policy.reference_index`, its net
/// winding number over the period, and aliasing warnings.
pub fn unwrap_phase(psi: &ComplexField, policy: &UnwrapPolicy) -> Result<(Vec<f64>, i64, Vec<Warning>)> {
    let n = psi.len();
    if policy.reference_index >= n {
        return Err(Error::config(
            "reference_index",
            format!("{} outside grid of {n} points", policy.reference_index),
        ));
    }
    let raw: Vec<f64> = psi.values().iter().map(|z| z.arg()).collect();
    let mut warnings = Vec::new();
    let mut jumps = vec![0.0; n];
    for i in 1..n {
        jumps[i] = wrap(raw[i] - raw[i - 1]);
        if jumps[i].abs() >= policy.alias_threshold {
            warnings.push(Warning::PhaseAliasing { index: i, jump: jumps[i] });
        }
    }
    let r = policy.reference_index;
    let mut phase = vec![0.0; n];
    phase[r] = raw[r];
    for i in r + 1..n {
        phase[i] = phase[i - 1] + jumps[i];
    }
    for i in (0..r).rev() {
        phase[i] = phase[i + 1] - jumps[i + 1];
    }
    let closing = wrap(raw[0] - raw[n - 1]);
    let total: f64 = jumps.iter().sum::<f64>() + closing;
    let winding = (total / (2.0 * PI)).round() as i64;
    Ok((phase, winding, warnings))
}

/// Action fields recovered from a wavefunction.
#[derive(Debug, Clone)]
pub struct ActionPair {
    pub s0: ActionField,
    pub s1: RealField,
    pub warnings: Vec<Warning>,
}

/// `S1 = -(ħ/2) ln(ψ*ψ)` with `|ψ|²` floored at `(ε max|ψ|)²`, and
/// `S0 = ħ · unwrapped arg ψ`. The net phase winding becomes the slope of
/// the returned [`ActionField`].
pub fn from_wavefunction(psi: &ComplexField, params: &DualParams, policy: &UnwrapPolicy) -> Result<ActionPair> {
    psi.check_finite("wavefunction")?;
    let max = psi.max_abs();
    if max == 0.0 {
        return Err(Error::DegenerateWavefunction);
    }
    let hbar = params.hbar();
    let floor2 = (policy.amplitude_floor * max).powi(2);
    let mut floored = 0;
    let s1 = psi.map(|z| {
        let r2 = z.norm_sqr();
        let r2 = if r2 < floor2 {
            floored += 1;
            floor2
        } else {
            r2
        };
        -0.5 * hbar * r2.ln()
    });
    let (phase, winding, mut warnings) = unwrap_phase(psi, policy)?;
    if floored > 0 {
        warnings.insert(0, Warning::AmplitudeFloor { points: floored });
    }
    let grid = *psi.grid();
    let slope = hbar * 2.0 * PI * winding as f64 / grid.length();
    let samples = RealField::new(grid, phase.into_iter().map(|p| hbar * p).collect())?;
    Ok(ActionPair {
        s0: ActionField::with_slope(samples, slope),
        s1,
        warnings,
    })
}

/// Quaternion samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionField {
    grid: Grid1D,
    values: Vec<Quaternion>,
}

impl QuaternionField {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Quaternion] {
        &self.values
    }

    pub fn from_complex(f: &ComplexField) -> Self {
        QuaternionField {
            grid: *f.grid(),
            values: f.values().iter().map(|&z| Quaternion::from_complex(z)).collect(),
        }
    }

    /// Pointwise product `self · other`.
    pub fn mul(&self, other: &QuaternionField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(QuaternionField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a * b).collect(),
        })
    }
}

/// Result of composing a multi-channel action into wavefunctions.
#[derive(Debug, Clone)]
pub struct Composition {
    /// Target-system wavefunction, `ψ = Ψ φ⁻¹`; quaternion-valued once
    /// `S2` or `S3` is non-zero.
    pub psi: QuaternionField,
    /// `Ψ = exp(iS0/ħ - S1/ħ)`.
    pub big_psi: ComplexField,
    /// Interaction factor with `ψ φ = Ψ`.
    pub phi: QuaternionField,
}

/// Composes channels `S0..SN` (N ≤ 3, with `S1, S2, S3` on units `i, j, k`).
///
/// `φ⁻¹` is the ordered product `exp(+j S2/ħ) · exp(-k S3/ħ)`, taken in
/// index order; the factors do not commute, so this is not the exponential
/// of the sum.
pub fn compose_channels(s: &ActionChannels, params: &DualParams) -> Result<Composition> {
    let env = s.environment_count();
    if env > 3 {
        return Err(Error::TooManyChannels(env));
    }
    let hbar = params.hbar();
    let big_psi = to_wavefunction(s.channel(0).samples(), s.channel(1).samples(), params)?;
    let grid = *s.grid();
    let zeros = RealField::zeros(grid);
    let s2 = if env >= 2 { s.channel(2).samples() } else { &zeros };
    let s3 = if env >= 3 { s.channel(3).samples() } else { &zeros };
    let factors: Vec<(Quaternion, Quaternion)> = s2
        .values()
        .iter()
        .zip(s3.values())
        .map(|(&a, &b)| {
            let inv = Quaternion::new(0.0, 0.0, a / hbar, 0.0).exp()
                * Quaternion::new(0.0, 0.0, 0.0, -b / hbar).exp();
            let phi = inv.inverse().expect("unit-norm factors are invertible");
            (phi, inv)
        })
        .collect();
    let phi = QuaternionField {
        grid,
        values: factors.iter().map(|f| f.0).collect(),
    };
    let phi_inv = QuaternionField {
        grid,
        values: factors.iter().map(|f| f.1).collect(),
    };
    let psi = QuaternionField::from_complex(&big_psi).mul(&phi_inv)?;
    Ok(Composition { psi, big_psi, phi })
}
