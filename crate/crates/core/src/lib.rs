//! Numerical machinery for dual-sector dissipative mechanics.
//!
//! The crate integrates coupled Hamilton–Jacobi fields for a system and its
//! environmental partner, maps them to and from a wavefunction through the
//! Madelung transform, and evolves the resulting generalized dissipative
//! wave equation with a split-step spectral solver. In the mass-symmetric,
//! closed limit that equation coincides with the linear Schrödinger
//! equation, which [`wavesolver::schrodinger_reference`] solves
//! independently.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod hjfields;
pub mod madelung;
pub mod ode;
pub mod oscillators;
pub mod output;
pub mod params;
pub mod quaternion;
pub mod runner;
pub mod scenarios;
pub mod spectral;
pub mod verify;
pub mod wavesolver;

pub use error::{BlowUp, Error, Result, RunError};
pub use field::{field_norm, ComplexField, Field, RealField};
pub use grid::Grid1D;
pub use num_complex::Complex64;
pub use params::DualParams;
pub use quaternion::{quaternion_exp, Quaternion};
pub use spectral::spectral_derivative;
