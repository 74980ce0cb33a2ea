use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of a dual-sector system: per-channel masses `m0..mN`,
/// the action quantum `hbar` and the dispersion constant `zeta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct DualParams {
    masses: Vec<f64>,
    hbar: f64,
    zeta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    masses: Vec<f64>,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default)]
    zeta: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawParams> for DualParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        let p = DualParams::new(r.masses, r.hbar)?;
        match r.zeta {
            Some(z) => p.with_zeta(z),
            None => Ok(p),
        }
    }
}

impl From<DualParams> for RawParams {
    fn from(p: DualParams) -> Self {
        RawParams {
            masses: p.masses,
            hbar: p.hbar,
            zeta: Some(p.zeta),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(name, format!("must be finite and positive, got {v}")))
    }
}

impl DualParams {
    /// At least two masses (system and one environment channel).
    pub fn new(masses: Vec<f64>, hbar: f64) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::config(
                "masses",
                format!("need at least 2 masses, got {}", masses.len()),
            ));
        }
        for (i, &m) in masses.iter().enumerate() {
            positive(&format!("masses[{i}]"), m)?;
        }
        let hbar = positive("hbar", hbar)?;
        Ok(DualParams {
            masses,
            hbar,
            zeta: hbar,
        })
    }

    pub fn dual(m0: f64, m1: f64, hbar: f64) -> Result<Self> {
        DualParams::new(vec![m0, m1], hbar)
    }

    /// Equal unit masses, `hbar = 1`.
    pub fn symmetric_unit() -> Self {
        DualParams::dual(1.0, 1.0, 1.0).expect("valid constants")
    }

    pub fn with_zeta(mut self, zeta: f64) -> Result<Self> {
        self.zeta = positive("zeta", zeta)?;
        Ok(self)
    }

    pub fn with_mass(mut self, index: usize, m: f64) -> Result<Self> {
        if index >= self.masses.len() {
            return Err(Error::config("masses", format!("no channel {index}")));
        }
        self.masses[index] = positive(&format!("masses[{index}]"), m)?;
        Ok(self)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, n: usize) -> f64 {
        self.masses[n]
    }

    pub fn m0(&self) -> f64 {
        self.masses[0]
    }

    pub fn m1(&self) -> f64 {
        self.masses[1]
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// `m = (1/m0 + 1/m1)^-1`.
    pub fn reduced_mass(&self) -> f64 {
        1.0 / (1.0 / self.m0() + 1.0 / self.m1())
    }

    /// `1/m̄ = 1/m0 - 1/m1`; exactly zero when `m0 == m1`.
    pub fn inverse_residual_mass(&self) -> f64 {
        if self.m0() == self.m1() {
            0.0
        } else {
            1.0 / self.m0() - 1.0 / self.m1()
        }
    }

    /// `m̄`, infinite in the mass-symmetric case.
    pub fn residual_mass(&self) -> f64 {
        let inv = self.inverse_residual_mass();
        if inv == 0.0 {
            f64::INFINITY
        } else {
            1.0 / inv
        }
    }

    pub fn is_mass_symmetric(&self) -> bool {
        self.inverse_residual_mass() == 0.0
    }
}
