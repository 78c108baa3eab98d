//! Simulator for the quantum interaction of free electrons with a single
//! photonic cavity mode.
//!
//! The cavity mode lives on a truncated Fock ladder `|0⟩ … |n_max⟩`; the
//! electron lives on a finite window of energy-ladder states `|k⟩`
//! (energies `E_0 + k·ħω`). A single electron pass scatters the joint state
//! with the displacement-type operator `S = exp(g b a† − g* b† a)`, where
//! `a` is the photon annihilation operator, `b` shifts the electron one rung
//! down, and `g` is the dimensionless coupling of one pass.
//!
//! On top of that single interaction the crate builds the multi-electron
//! machinery used for photonic-state shaping: electron-induced quantum
//! channels (trace-out), post-selection and stochastic measurement of the
//! departing electron, ring-down loss between electron arrivals, and the
//! higher-level protocols (Fock-state building by repeated measurement,
//! thermalization by trace-out, displacement by electron energy combs,
//! displaced Fock states).
//!
//! Modules:
//! - [`fockspace`]: photon-mode states (pure vectors and density matrices).
//! - [`electron`]: electron ladder states, delta and comb constructors.
//! - [`scattering`]: the scattering kernel, joint evolution, Kraus channels,
//!   the coupling integral, and closed-form special cases.
//! - [`chain`]: repeated interact → measure/trace → loss pipelines.
//! - [`analysis`]: photon-statistics observables and fits.

pub mod analysis;
pub mod chain;
pub mod electron;
pub mod error;
pub mod fockspace;
pub(crate) mod numeric;
pub mod scattering;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Default tolerance for state normalization checks.
pub const EPS_NORM: f64 = 1e-10;
/// Default tolerance for Hermiticity checks.
pub const EPS_HERM: f64 = 1e-10;
/// Default tolerance for positive-semidefiniteness checks (smallest
/// eigenvalue may not be below `-EPS_PSD`).
pub const EPS_PSD: f64 = 1e-8;
