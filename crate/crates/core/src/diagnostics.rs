//! Observables computed on wavefunction snapshots.

use std::collections::BTreeMap;
use std::ops::Range;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{field_norm, ComplexField, RealField};
use crate::params::DualParams;
use crate::spectral::{gradient, laplacian};
use crate::wavesolver::{Snapshot, WaveScenario};

/// Relative amplitude floor used when dividing by `√ρ`.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotReport {
    pub t: f64,
    pub norm: f64,
    /// Expectation of the symmetric-mode Hamiltonian per unit norm.
    pub energy: f64,
    /// Backward difference of `ln N`; zero on the first snapshot.
    pub norm_drift_rate: f64,
    /// L2 norm of the discrete continuity residual; zero on the first
    /// snapshot.
    pub continuity_residual_l2: f64,
    pub extras: BTreeMap<String, f64>,
}

/// `Q = -(ħ²/2m) ∇²√ρ / √ρ`, with `ρ` floored at `ε²·max ρ`.
pub fn quantum_potential(rho: &RealField, mass: f64, hbar: f64) -> Result<RealField> {
    rho.check_finite("density")?;
    if let Some(i) = rho.values().iter().position(|&r| r < 0.0) {
        return Err(Error::config("rho", format!("negative density at index {i}")));
    }
    let max = rho.max_abs();
    if max == 0.0 {
        return Err(Error::DegenerateWavefunction);
    }
    let floor = DENSITY_FLOOR * DENSITY_FLOOR * max;
    let amp = rho.map(|r| r.max(floor).sqrt());
    let lap = laplacian(&amp)?;
    let c = -hbar * hbar / (2.0 * mass);
    lap.zip_map(&amp, |l, a| c * l / a)
}

/// `(max ρ - min ρ) / (max ρ + min ρ)` over `window`.
pub fn fringe_visibility(rho: &RealField, window: Range<usize>) -> Result<f64> {
    if window.is_empty() || window.end > rho.len() {
        return Err(Error::config(
            "window",
            format!("{window:?} is empty or exceeds {} samples", rho.len()),
        ));
    }
    let w = &rho.values()[window];
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min == 0.0 {
        return Err(Error::config("rho", "density vanishes on the window"));
    }
    Ok((max - min) / (max + min))
}

/// `τ = |m̄| L² / ħ`; infinite in the mass-symmetric case.
pub fn tau_dual(p: &DualParams, l: f64) -> f64 {
    let inv = p.inverse_residual_mass();
    if inv == 0.0 {
        f64::INFINITY
    } else {
        l * l / (inv.abs() * p.hbar())
    }
}

/// Density-weighted mean of `f`.
pub fn weighted_mean(rho: &RealField, f: impl Fn(usize, f64) -> f64) -> f64 {
    let grid = rho.grid();
    let total: f64 = rho.values().iter().sum();
    let s: f64 = rho.values().iter().enumerate().map(|(i, r)| r * f(i, grid.x(i))).sum();
    s / total
}

pub fn mean_position(rho: &RealField) -> f64 {
    weighted_mean(rho, |_, x| x)
}

/// Standard deviation of position under `ρ`.
pub fn rms_width(rho: &RealField) -> f64 {
    let mu = mean_position(rho);
    weighted_mean(rho, |_, x| (x - mu) * (x - mu)).sqrt()
}

/// `[(ζ²/4m)∫|∇ψ|² + ∫V|ψ|²] / N` with `m` the reduced mass.
pub fn energy(psi: &ComplexField, reduced_mass: f64, zeta: f64, vg0: Option<&RealField>) -> Result<f64> {
    let dx = psi.grid().dx();
    let d = gradient(psi)?;
    let kinetic: f64 = d.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
    let potential = match vg0 {
        Some(v) => {
            psi.same_grid(v)?;
            psi.values().iter().zip(v.values()).map(|(z, v)| v * z.norm_sqr()).sum::<f64>() * dx
        }
        None => 0.0,
    };
    Ok((zeta * zeta / (4.0 * reduced_mass) * kinetic + potential) / field_norm(psi))
}

/// Probability current `J = ζ Im(ψ*∇ψ) / m`.
pub fn current(psi: &ComplexField, mass: f64, zeta: f64) -> Result<RealField> {
    let d = gradient(psi)?;
    psi.zip_map(&d, |z, dz| zeta * (z.conj() * dz).im / mass)
}

/// L2 norm of `(ρ_n - ρ_{n-1})/Δt + ½(∇·J_n + ∇·J_{n-1})`.
pub fn continuity_residual(prev: &ComplexField, cur: &ComplexField, dt: f64, mass: f64, zeta: f64) -> Result<f64> {
    prev.same_grid(cur)?;
    let div_prev = gradient(&current(prev, mass, zeta)?)?;
    let div_cur = gradient(&current(cur, mass, zeta)?)?;
    let (rp, rc) = (prev.density(), cur.density());
    let dx = cur.grid().dx();
    let s: f64 = (0..cur.len())
        .map(|i| {
            let r = (rc.values()[i] - rp.values()[i]) / dt + 0.5 * (div_cur.values()[i] + div_prev.values()[i]);
            r * r
        })
        .sum();
    Ok((s * dx).sqrt())
}

/// Diagnostics for `snap`, using `prev` (if any) for time differences.
pub fn report(snap: &Snapshot, prev: Option<&Snapshot>, sc: &WaveScenario) -> Result<SnapshotReport> {
    let zeta = sc.zeta();
    let psi = &snap.psi;
    let norm = field_norm(psi);
    let energy = energy(psi, sc.params.reduced_mass(), zeta, sc.vg(0))?;
    let (drift, residual) = match prev {
        Some(p) if snap.t > p.t => {
            let dt = snap.t - p.t;
            let drift = (norm.ln() - field_norm(&p.psi).ln()) / dt;
            let res = continuity_residual(&p.psi, psi, dt, sc.params.m0(), zeta)?;
            (drift, res)
        }
        _ => (0.0, 0.0),
    };
    let rho = psi.density();
    let mut extras = BTreeMap::new();
    let width = rms_width(&rho);
    extras.insert("mean_x".into(), mean_position(&rho));
    extras.insert("rms_width".into(), width);
    if let Some(v) = sc.vg(1) {
        extras.insert("mean_vg1".into(), weighted_mean(&rho, |i, _| v.values()[i]));
    }
    let tau = tau_dual(&sc.params, width);
    if tau.is_finite() {
        extras.insert("tau_dual".into(), tau);
    }
    let r = SnapshotReport {
        t: snap.t,
        norm,
        energy,
        norm_drift_rate: drift,
        continuity_residual_l2: residual,
        extras,
    };
    let finite = [r.norm, r.energy, r.norm_drift_rate, r.continuity_residual_l2]
        .iter()
        .chain(r.extras.values())
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::BlowUp {
            step: snap.step,
            reason: "non-finite diagnostics".into(),
        });
    }
    Ok(r)
}

/// `arg ⟨a|b⟩`.
pub fn overlap_phase(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    a.same_grid(b)?;
    let s: Complex64 = a.values().iter().zip(b.values()).map(|(x, y)| x.conj() * y).sum();
    Ok(s.arg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::hjfields::PotentialSet;
    use crate::wavesolver::evolve;
    use proptest::prelude::*;

    #[test]
    fn uniform_density_has_no_quantum_potential() {
        let g = Grid1D::standard();
        let q = quantum_potential(&RealField::constant(g, 0.3), 1.0, 1.0).unwrap();
        assert!(q.max_abs() < 1e-12);
        assert!(quantum_potential(&RealField::zeros(g), 1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_quantum_potential() {
        let g = Grid1D::standard();
        let (sigma, m, hbar) = (1.0, 1.3, 0.9);
        let rho = RealField::from_fn(g, |x| (-x * x / (2.0 * sigma * sigma)).exp());
        let q = quantum_potential(&rho, m, hbar).unwrap();
        for (i, x) in g.points().enumerate() {
            if rho.values()[i] >= 1e-6 {
                let expect = -(hbar * hbar / (2.0 * m)) * (x * x / (4.0 * sigma.powi(4)) - 1.0 / (2.0 * sigma * sigma));
                assert!((q.values()[i] - expect).abs() < 1e-8, "x = {x}");
            }
        }
    }

    #[test]
    fn visibility_examples() {
        let g = Grid1D::standard();
        let kappa = 2.0 * std::f64::consts::PI * 4.0 / g.length();
        let full = RealField::from_fn(g, |x| 1.0 + (kappa * x).cos());
        assert!((fringe_visibility(&full, 0..1024).unwrap() - 1.0).abs() < 1e-10);
        let r: f64 = 0.25;
        let two = RealField::from_fn(g, |x| (Complex64::new(1.0, 0.0) + Complex64::from_polar(r.sqrt(), kappa * x)).norm_sqr());
        let v = fringe_visibility(&two, 0..1024).unwrap();
        assert!((v - 2.0 * r.sqrt() / (1.0 + r)).abs() < 1e-6);
        assert!((v - 0.8).abs() < 1e-6);
        assert_eq!(fringe_visibility(&RealField::constant(g, 2.0), 10..20).unwrap(), 0.0);
        assert!(fringe_visibility(&full, 5..5).is_err());
        assert!(fringe_visibility(&RealField::zeros(g), 0..4).is_err());
    }

    #[test]
    fn gaussian_bump_visibility_pinned() {
        let g = Grid1D::standard();
        let rho = RealField::from_fn(g, |x| (-x * x / 2.0).exp());
        // window [-1, 1): min at the left edge, ρ(-1) = e^{-1/2}
        let v = fringe_visibility(&rho, 461..563).unwrap();
        let edge = (-g.x(461).powi(2) / 2.0).exp();
        assert!((v - (1.0 - edge) / (1.0 + edge)).abs() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let g = |m0, m1, h| DualParams::dual(m0, m1, h).unwrap();
        assert_eq!(tau_dual(&g(1.0, 1.0, 1.0), 3.0), f64::INFINITY);
        assert!((tau_dual(&g(1.0, 2.0, 1.0), 3.0) - 18.0).abs() < 1e-12);
        // m̄ = 1 needs 1/m0 - 1/m1 = 1
        assert!((tau_dual(&g(0.5, 1.0, 1.0), 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_on_free_run() {
        let g = Grid1D::standard();
        let psi0 = ComplexField::from_fn(g, |x| Complex64::from_polar((-x * x / 2.0).exp(), 0.5 * x));
        let n0 = field_norm(&psi0).sqrt();
        let psi0 = psi0.scale(Complex64::new(1.0 / n0, 0.0));
        let sc = WaveScenario::new(psi0, DualParams::symmetric_unit()).with_steps(1e-3, 100).with_snapshot_every(10);
        let run = evolve(&sc).unwrap();
        for r in &run.reports {
            assert!(r.norm_drift_rate.abs() < 1e-9);
            assert!((r.norm - 1.0).abs() < 1e-12);
        }
        assert!(!run.reports[0].extras.contains_key("tau_dual"));
    }

    #[test]
    fn drift_rate_tracks_vg1() {
        let g = Grid1D::standard();
        let lambda = 0.1;
        let psi0 = ComplexField::from_fn(g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0));
        let sc = WaveScenario::new(psi0, DualParams::symmetric_unit())
            .with_potentials(PotentialSet::symmetric().with_vg(1, RealField::constant(g, -lambda)))
            .with_steps(1e-3, 100)
            .with_snapshot_every(25);
        let run = evolve(&sc).unwrap();
        for r in &run.reports[1..] {
            assert!((r.norm_drift_rate / (-2.0 * lambda) - 1.0).abs() < 1e-4);
            assert!((r.extras["mean_vg1"] + lambda).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn quantum_potential_scale_invariant(c in 1e-3f64..1e3, s in 0.7f64..2.0, x0 in -2.0f64..2.0) {
            let g = Grid1D::standard();
            let rho = RealField::from_fn(g, |x| (-(x - x0).powi(2) / (2.0 * s * s)).exp() + 0.1 * (-(x + x0).powi(2)).exp());
            let q1 = quantum_potential(&rho, 1.0, 1.0).unwrap();
            let q2 = quantum_potential(&rho.scale(c), 1.0, 1.0).unwrap();
            for i in 0..g.n_points() {
                if rho.values()[i] > 1e-3 * rho.max_abs() {
                    prop_assert!((q1.values()[i] - q2.values()[i]).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn visibility_in_unit_interval(vals in prop::collection::vec(0.0f64..10.0, 8), a in 0usize..8, len in 1usize..8) {
            let g = Grid1D::new(8, 0.0, 1.0).unwrap();
            let rho = RealField::new(g, vals).unwrap();
            let end = (a + len).min(8);
            if let Ok(v) = fringe_visibility(&rho, a..end) {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn tau_monotone(l1 in 0.1f64..10.0, dl in 0.01f64..5.0, m1 in 1.1f64..5.0, dm in 0.01f64..5.0) {
            let p = DualParams::dual(1.0, m1, 1.0).unwrap();
            prop_assert!(tau_dual(&p, l1 + dl) > tau_dual(&p, l1));
            // m̄ = (1 - 1/m1)⁻¹ decreases as m1 grows
            let q = DualParams::dual(1.0, m1 + dm, 1.0).unwrap();
            prop_assert!(q.residual_mass() < p.residual_mass());
            prop_assert!(tau_dual(&q, l1) < tau_dual(&p, l1));
        }
    }
}
