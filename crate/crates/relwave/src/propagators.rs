//! Time evolution: the exact two-branch spectral propagator, the order-N
//! truncated propagator of the pseudo-differential generator, the free
//! Schroedinger reference propagator, and the phase map connecting the
//! first-order field to the second-order (KGF) field.

use num_complex::Complex64;

use crate::dispersion::{omega_branch, series_coeff_f64, truncated_symbol, Branch};
use crate::error::RelwaveError;
use crate::grid::ComplexField;
use crate::units::PhysicalParams;
use crate::wavefield::ModeAmplitudes;
use crate::Result;

/// Exact evolution: plus modes pick up `e^{-i omega_plus dt}`, minus modes
/// `e^{+i omega_minus dt}`. Negative dt reverses time.
pub fn evolve_exact(amps: &ModeAmplitudes, dt: f64) -> ModeAmplitudes {
    let mut out = amps.clone();
    let grid = amps.grid().clone();
    let params = *amps.params();
    for m in 0..grid.n_total() {
        let k = grid.k_squared(m).sqrt();
        let wp = omega_branch(k, Branch::Plus, &params);
        let wm = omega_branch(k, Branch::Minus, &params);
        out.plus_mut()[m] *= Complex64::from_polar(1.0, -wp * dt);
        out.minus_mut()[m] *= Complex64::from_polar(1.0, wm * dt);
    }
    out
}

/// Order-N truncated evolution of a (+)-branch field: per mode, the exact
/// exponential of the truncated generator, `e^{-i omega_tilde(k; N) dt}`.
/// N = 1 is the free Schroedinger propagator. The caller is responsible for
/// the convergence domain (band limit k < mu); outside it the truncated
/// symbol carries no accuracy contract.
pub fn evolve_truncated(
    field: &ComplexField,
    dt: f64,
    order: usize,
    params: &PhysicalParams,
) -> Result<ComplexField> {
    if order < 1 {
        return Err(RelwaveError::domain("truncation order must be at least 1"));
    }
    let grid = field.grid().clone();
    let mut phases = Vec::with_capacity(grid.n_total());
    for m in 0..grid.n_total() {
        let symbol = truncated_symbol(grid.k_squared(m), order, params)?;
        phases.push(Complex64::from_polar(1.0, -symbol * dt));
    }
    Ok(field.apply_symbol(|m| phases[m]))
}

/// Free Schroedinger propagator: per-mode phase `e^{-i (hbar k^2 / 2m) dt}`.
pub fn schrodinger_reference(field: &ComplexField, dt: f64, params: &PhysicalParams) -> ComplexField {
    let grid = field.grid().clone();
    let coeff = params.hbar / (2.0 * params.mass);
    field.apply_symbol(|m| Complex64::from_polar(1.0, -coeff * grid.k_squared(m) * dt))
}

/// Direction of the phase map between the first-order field and the KGF field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMap {
    /// `phi = psi e^{-i mu c t}`
    ToPhi,
    /// `psi = phi e^{+i mu c t}`
    ToPsi,
}

/// Apply the global phase `e^{-/+ i mu c t}` relating psi and phi.
pub fn kgf_phase_map(
    field: &ComplexField,
    t: f64,
    params: &PhysicalParams,
    direction: PhaseMap,
) -> ComplexField {
    let angle = match direction {
        PhaseMap::ToPhi => -params.mu * params.c * t,
        PhaseMap::ToPsi => params.mu * params.c * t,
    };
    let mut out = field.clone();
    out.scale(Complex64::from_polar(1.0, angle));
    out
}

/// RK4 time stepping of the truncated generator in its physical-space form
/// `d psi / dt = i mu c sum_{n<=N} a_n / mu^{2n} Delta^n psi`. Cross-validation
/// for [`evolve_truncated`] only; the spectral exponential is exact in time.
pub fn evolve_truncated_rk4(
    field: &ComplexField,
    dt: f64,
    steps: usize,
    order: usize,
    params: &PhysicalParams,
) -> Result<ComplexField> {
    if order < 1 {
        return Err(RelwaveError::domain("truncation order must be at least 1"));
    }
    if steps == 0 {
        return Err(RelwaveError::domain("rk4 needs at least one step"));
    }
    let h = dt / steps as f64;
    let coeffs: Vec<f64> = (1..=order)
        .map(|n| Ok(series_coeff_f64(n)? / params.mu.powi(2 * n as i32)))
        .collect::<Result<_>>()?;
    let rate = Complex64::new(0.0, params.mu * params.c);

    let generator = |f: &ComplexField| -> Result<ComplexField> {
        let mut acc = ComplexField::zeros(f.grid().clone(), f.representation());
        for (n, &c) in coeffs.iter().enumerate() {
            let term = f.laplacian_power((n + 1) as u32);
            acc = acc.zip_map(&term, |a, t| a + rate * c * t)?;
        }
        Ok(acc)
    };

    let mut state = field.clone();
    for _ in 0..steps {
        let k1 = generator(&state)?;
        let s2 = state.zip_map(&k1, |s, k| s + 0.5 * h * k)?;
        let k2 = generator(&s2)?;
        let s3 = state.zip_map(&k2, |s, k| s + 0.5 * h * k)?;
        let k3 = generator(&s3)?;
        let s4 = state.zip_map(&k3, |s, k| s + h * k)?;
        let k4 = generator(&s4)?;
        let sum = k1
            .zip_map(&k2, |a, b| a + 2.0 * b)?
            .zip_map(&k3, |a, b| a + 2.0 * b)?
            .zip_map(&k4, |a, b| a + b)?;
        state = state.zip_map(&sum, |s, k| s + h / 6.0 * k)?;
    }
    Ok(state)
}
