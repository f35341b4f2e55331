//! Physical constants and the dimensionless scaling used throughout.
//!
//! The only derived constant is the inverse Compton length `mu = m c / hbar`.
//! The characteristic length `L` fixes a characteristic time
//! `t0 = 2 m L^2 / hbar` and the relativity parameter
//! `epsilon = (hbar / 2 m c L)^2 = 1 / (2 mu L)^2`, which measures the square
//! of the ratio of the Compton length to `L`.

use crate::error::RelwaveError;
use crate::Result;

/// Particle mass, speed of light and the action quantum, plus the derived
/// inverse Compton length. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mass: f64,
    pub c: f64,
    pub hbar: f64,
    /// Inverse Compton length, `mu = m c / hbar`.
    pub mu: f64,
}

impl PhysicalParams {
    /// Build parameters from mass, speed of light and hbar.
    pub fn new(mass: f64, c: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0 && c > 0.0 && hbar > 0.0)
            || !mass.is_finite()
            || !c.is_finite()
            || !hbar.is_finite()
        {
            return Err(RelwaveError::domain(format!(
                "mass, c and hbar must be strictly positive and finite (got {mass}, {c}, {hbar})"
            )));
        }
        Ok(PhysicalParams {
            mass,
            c,
            hbar,
            mu: mass * c / hbar,
        })
    }

    /// Natural units `m = c = hbar = 1`, hence `mu = 1`.
    pub fn natural() -> Self {
        PhysicalParams {
            mass: 1.0,
            c: 1.0,
            hbar: 1.0,
            mu: 1.0,
        }
    }
}

/// Characteristic length/time pair and the dimensionless relativity
/// parameter epsilon derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub length: f64,
    pub t0: f64,
    pub epsilon: f64,
}

impl ScalingParams {
    /// Derive the scaling from a characteristic length: `t0 = 2 m L^2 / hbar`
    /// (so that `(hbar / 2m) t0 / L^2 = 1`) and `epsilon = 1 / (2 mu L)^2`.
    pub fn new(params: &PhysicalParams, length: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(RelwaveError::domain(format!(
                "characteristic length must be strictly positive (got {length})"
            )));
        }
        let t0 = 2.0 * params.mass * length * length / params.hbar;
        let epsilon = 1.0 / (2.0 * params.mu * length).powi(2);
        Ok(ScalingParams {
            length,
            t0,
            epsilon,
        })
    }
}
