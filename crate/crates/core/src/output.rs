//! CSV serialization of executions.
//!
//! Every file starts with a header row; floats are written in scientific
//! notation with 17 significant digits, which round-trips `f64` exactly.
//! A run that stopped early ends its summary with a `# blow-up ...` line.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::madelung::{from_wavefunction, UnwrapPolicy};
use crate::params::DualParams;
use crate::runner::{Execution, Outcome};

pub const WAVE_SNAPSHOT_HEADER: &str = "t,x,re_psi,im_psi,rho,S0,S1";
pub const WAVE_SUMMARY_HEADER: &str = "t,norm,energy,drift_rate,continuity_residual";
pub const HJ_SUMMARY_HEADER: &str = "t,max_abs_gradient,status";
pub const OSCILLATOR_SNAPSHOT_HEADER: &str = "t,x,v,y,vy,x_exact,v_exact";
pub const OSCILLATOR_SUMMARY_HEADER: &str = "t,energy_x,energy_y,error_x";

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

fn hj_snapshot_header(channels: usize) -> String {
    let mut h = String::from("t,x");
    for n in 0..channels {
        let _ = write!(h, ",S{n}");
    }
    h.push_str(",W");
    h
}

pub fn snapshot_csv(exec: &Execution) -> String {
    let mut out = String::new();
    let grid = exec.grid;
    match &exec.outcome {
        Outcome::Wave(run, sc) => {
            out.push_str(WAVE_SNAPSHOT_HEADER);
            out.push('\n');
            let params = DualParams::dual(sc.params.m0(), sc.params.m1(), sc.params.hbar()).expect("validated params");
            for snap in &run.snapshots {
                let actions = from_wavefunction(&snap.psi, &params, &UnwrapPolicy::default()).ok();
                for (i, z) in snap.psi.values().iter().enumerate() {
                    let (s0, s1) = actions
                        .as_ref()
                        .map_or((f64::NAN, f64::NAN), |a| (a.s0.samples().values()[i], a.s1.values()[i]));
                    row(&mut out, &[snap.t, grid.x(i), z.re, z.im, z.norm_sqr(), s0, s1]);
                }
            }
        }
        Outcome::Hj(snaps) => {
            let channels = snaps.first().map_or(2, |s| s.fields.len());
            out.push_str(&hj_snapshot_header(channels));
            out.push('\n');
            for s in snaps {
                for i in 0..grid.n_points() {
                    let mut v = vec![s.t, grid.x(i)];
                    v.extend(s.fields.channels().iter().map(|c| c.samples().values()[i]));
                    v.push(s.participation.values()[i]);
                    row(&mut out, &v);
                }
            }
        }
        Outcome::Oscillator(tr) => {
            out.push_str(OSCILLATOR_SNAPSHOT_HEADER);
            out.push('\n');
            for i in 0..tr.t.len() {
                let s = tr.states[i];
                row(&mut out, &[tr.t[i], s.x, s.vx, s.y, s.vy, tr.exact[i].0, tr.exact[i].1]);
            }
        }
    }
    out
}

pub fn summary_csv(exec: &Execution) -> String {
    let mut out = String::new();
    match &exec.outcome {
        Outcome::Wave(run, _) => {
            out.push_str(WAVE_SUMMARY_HEADER);
            out.push('\n');
            for r in &run.reports {
                row(&mut out, &[r.t, r.norm, r.energy, r.norm_drift_rate, r.continuity_residual_l2]);
            }
        }
        Outcome::Hj(snaps) => {
            out.push_str(HJ_SUMMARY_HEADER);
            out.push('\n');
            for s in snaps {
                let _ = writeln!(out, "{},{},ok", fmt_f64(s.t), fmt_f64(s.max_abs_gradient));
            }
            if let Some(f) = &exec.failure {
                let _ = writeln!(out, "{},{},caustic_step_{}", fmt_f64(f.t), fmt_f64(f64::NAN), f.step);
            }
        }
        Outcome::Oscillator(tr) => {
            out.push_str(OSCILLATOR_SUMMARY_HEADER);
            out.push('\n');
            for i in 0..tr.t.len() {
                let err = tr.states[i].x - tr.exact[i].0;
                row(&mut out, &[tr.t[i], tr.energy_x[i], tr.energy_y[i], err]);
            }
        }
    }
    if let Some(f) = &exec.failure {
        let reason = f.reason.replace('\n', " ");
        let _ = writeln!(out, "# blow-up at step {} (t = {}): {}", f.step, fmt_f64(f.t), reason);
    }
    out
}

pub fn write_snapshots(exec: &Execution, w: &mut impl Write) -> io::Result<()> {
    w.write_all(snapshot_csv(exec).as_bytes())
}

pub fn write_summary(exec: &Execution, w: &mut impl Write) -> io::Result<()> {
    w.write_all(summary_csv(exec).as_bytes())
}
