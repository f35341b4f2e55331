//! relwave: a numerical laboratory for a complex scalar field evolved by a
//! first-order-in-time relativistic wave equation.
//!
//! The field splits into two positive-frequency branches with dispersion laws
//! `omega_pm(k) = c (sqrt(mu^2 + k^2) -/+ mu)`, where `mu = m c / hbar` is the
//! inverse Compton length. The crate provides:
//!
//! - exact two-branch spectral evolution on periodic grids,
//! - truncated pseudo-differential approximations of the evolution generator
//!   (order-1 truncation is the free Schroedinger propagator),
//! - probability, energy and momentum densities with their continuity laws,
//! - a finite-mode, truncated-occupation Fock-space validator for the
//!   second-quantized form of the theory.

pub mod dispersion;
pub mod error;
pub mod fock;
pub mod grid;
pub mod io;
pub mod observables;
pub mod propagators;
pub mod scenario;
pub mod units;
pub mod wavefield;

pub use dispersion::{Branch, DispersionTable};
pub use error::RelwaveError;
pub use grid::{ComplexField, Representation, SpectralGrid};
pub use units::{PhysicalParams, ScalingParams};
pub use wavefield::{InitialData, ModeAmplitudes};

/// Crate result alias.
pub type Result<T> = std::result::Result<T, RelwaveError>;
