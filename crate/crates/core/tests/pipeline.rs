use std::f64::consts::PI;

use dualwave_core::diagnostics::{fringe_visibility, rms_width};
use dualwave_core::madelung::{from_wavefunction, to_wavefunction, UnwrapPolicy};
use dualwave_core::output::{snapshot_csv, summary_csv};
use dualwave_core::runner::{run_spec, Outcome};
use dualwave_core::scenarios::{builtin, builtin_names, builtin_suite, expand, ScenarioSpec};
use dualwave_core::wavesolver::{evolve, schrodinger_reference, WaveScenario};
use dualwave_core::{field_norm, spectral_derivative, DualParams, Grid1D, RealField};
use proptest::prelude::*;

fn wave(name: &str) -> WaveScenario {
    match expand(&builtin(name).unwrap(), Grid1D::standard()).unwrap() {
        dualwave_core::scenarios::Prepared::Wave(sc) => sc,
        _ => panic!("{name} is not a wave scenario"),
    }
}

#[test]
fn every_builtin_runs_and_serializes() {
    for spec in builtin_suite() {
        let e = run_spec(&spec, Grid1D::standard()).unwrap();
        let expect_failure = spec.name == "hj_caustic";
        assert_eq!(e.failure.is_some(), expect_failure, "{}", spec.name);
        let snaps = snapshot_csv(&e);
        let summary = summary_csv(&e);
        let width = snaps.lines().next().unwrap().split(',').count();
        assert!(snaps.lines().skip(1).all(|l| l.split(',').count() == width), "{}", spec.name);
        assert!(summary.lines().count() > 1);
    }
}

#[test]
fn scenario_specs_round_trip_through_toml() {
    for spec in builtin_suite() {
        let text = toml::to_string(&spec).unwrap();
        let back: ScenarioSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec, "{}", spec.name);
    }
    assert_eq!(builtin_names().len(), 12);
}

#[test]
fn interference_fringes_appear_at_overlap() {
    let sc = wave("interference_two_gaussian");
    let run = evolve(&sc).unwrap();
    let g = Grid1D::standard();
    let centre = (g.n_points() / 2 - 40)..(g.n_points() / 2 + 40);
    let v0 = fringe_visibility(&run.snapshots[0].psi.density(), centre.clone()).unwrap();
    let v1 = fringe_visibility(&run.last().psi.density(), centre).unwrap();
    assert!(v1 > 0.9, "{v1}");
    assert!(v1 > v0);
}

#[test]
fn residual_mass_changes_dynamics_only_when_asymmetric() {
    let sc = wave("residual_mass_plane_wave").with_steps(2e-4, 500);
    let asym = evolve(&sc).unwrap();
    let mut sym = sc.clone();
    sym.params = DualParams::dual(1.0, 1.0, 1.0).unwrap();
    let sym = evolve(&sym).unwrap();
    let d = asym.last().psi.sup_distance(&sym.last().psi).unwrap();
    assert!(d > 1e-3, "{d}");
    let n = field_norm(&asym.last().psi);
    assert!((n - 1.0).abs() < 1e-8, "{n}");
}

#[test]
fn free_spreading_matches_reference_solver() {
    let sc = wave("free_gaussian_symmetric");
    let reference = schrodinger_reference(&sc.psi0, None, 1.0, 1.0, sc.dt, sc.n_steps, sc.snapshot_every).unwrap();
    let w0 = rms_width(&reference[0].psi.density());
    let w1 = rms_width(&reference.last().unwrap().psi.density());
    let t = sc.t_end();
    let expect = w0 * (1.0 + (t / (2.0 * w0 * w0)).powi(2)).sqrt();
    assert!((w1 / expect - 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn madelung_round_trip_on_smooth_actions(
        a in -2.0f64..2.0, b in -1.0f64..1.0, c in -0.5f64..0.5, winding in -3i32..=3, hbar in 0.3f64..3.0,
    ) {
        let g = Grid1D::new(256, -5.0, 5.0).unwrap();
        let params = DualParams::dual(1.0, 1.3, hbar).unwrap();
        let slope = 2.0 * PI * hbar * winding as f64 / g.length();
        let s0 = RealField::from_fn(g, |x| slope * x + a * (2.0 * PI * x / g.length()).sin());
        let s1 = RealField::from_fn(g, |x| b * (2.0 * PI * x / g.length()).cos() + c);
        let psi = to_wavefunction(&s0, &s1, &params).unwrap();
        let back = from_wavefunction(&psi, &params, &UnwrapPolicy::default()).unwrap();
        prop_assert!((back.s0.slope() - slope).abs() < 1e-9);
        let again = to_wavefunction(back.s0.samples(), &back.s1, &params).unwrap();
        prop_assert!(again.sup_distance(&psi).unwrap() < 1e-10);
    }

    #[test]
    fn spectral_derivative_is_exact_on_resolved_modes(mode in 1u32..40, amp in 0.1f64..5.0) {
        let g = Grid1D::standard();
        let k = 2.0 * PI * mode as f64 / g.length();
        let f = RealField::from_fn(g, |x| amp * (k * x).sin());
        let d = spectral_derivative(&f, 1).unwrap();
        let err = d.values().iter().zip(g.points()).map(|(v, x)| (v - amp * k * (k * x).cos()).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9 * amp * k.max(1.0));
    }

    #[test]
    fn symmetric_evolution_preserves_norm(sigma in 0.4f64..1.2, x0 in -2.0f64..2.0, k0 in -3.0f64..3.0) {
        let g = Grid1D::standard();
        let psi0 = dualwave_core::scenarios::expand_initial(
            &dualwave_core::scenarios::InitialData::Gaussian { sigma, x0, k0 },
            g,
        ).unwrap();
        let sc = WaveScenario::new(psi0, DualParams::symmetric_unit()).with_steps(1e-3, 100).with_snapshot_every(50);
        let run = evolve(&sc).unwrap();
        for s in &run.snapshots {
            prop_assert!((field_norm(&s.psi) - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn outcome_kinds_match_scenarios() {
    let e = run_spec(&builtin("dekker_damped").unwrap(), Grid1D::standard()).unwrap();
    assert!(matches!(e.outcome, Outcome::Oscillator(_)));
    let e = run_spec(&builtin("hj_free_particle").unwrap(), Grid1D::standard()).unwrap();
    assert!(matches!(e.outcome, Outcome::Hj(_)));
}
