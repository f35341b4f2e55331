//! Physical states: plane waves, Gaussian packets, the split of general
//! initial data into the two positive-frequency branches, and reconstruction
//! of the field and its generalized momentum at any time.
//!
//! Branch bookkeeping: both branch amplitudes are stored against the spatial
//! wavenumber k appearing in their plane-wave factor `e^{ikx}`, so the field
//! at a mode is `psi_k(t) = P_k e^{-i omega_plus t} + M_k e^{+i omega_minus t}`.
//! `M_k` absorbs the sign of the (-) term of the general expansion.

use std::sync::Arc;

use num_complex::Complex64;

use crate::dispersion::{omega_branch, Branch};
use crate::error::RelwaveError;
use crate::grid::{ComplexField, Representation, SpectralGrid};
use crate::units::PhysicalParams;
use crate::Result;

/// A field together with its time derivative at t = 0.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub psi0: ComplexField,
    pub psi_dot0: ComplexField,
}

impl InitialData {
    pub fn new(psi0: ComplexField, psi_dot0: ComplexField) -> Result<Self> {
        if !Arc::ptr_eq(psi0.grid(), psi_dot0.grid()) {
            return Err(RelwaveError::domain(
                "psi0 and psi_dot0 must share one grid",
            ));
        }
        Ok(InitialData { psi0, psi_dot0 })
    }
}

/// Per-mode complex coefficients of the (+) and (-) branches, in the unitary
/// spectral normalization of [`ComplexField`].
#[derive(Debug, Clone)]
pub struct ModeAmplitudes {
    grid: Arc<SpectralGrid>,
    params: PhysicalParams,
    psi_plus: Vec<Complex64>,
    psi_minus: Vec<Complex64>,
}

/// Unit-norm plane wave `e^{ikx}/sqrt(V)` on a lattice wavenumber, with the
/// time derivative fixed by the chosen branch.
pub fn plane_wave(
    k: &[f64],
    branch: Branch,
    grid: &Arc<SpectralGrid>,
    params: &PhysicalParams,
) -> Result<InitialData> {
    let mode = grid.lattice_index(k)?;
    // Built spectrally so every other mode is exactly zero; this keeps
    // high-order symbol applications free of amplified round-off.
    let mut values = vec![Complex64::default(); grid.n_total()];
    values[mode] = Complex64::new(1.0 / grid.cell_volume().sqrt(), 0.0);
    let psi0 = ComplexField::from_values(grid.clone(), values, Representation::Spectral)?;
    let k_mag = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    let omega = omega_branch(k_mag, branch, params);
    let rate = match branch {
        Branch::Plus => Complex64::new(0.0, -omega),
        Branch::Minus => Complex64::new(0.0, omega),
    };
    let mut psi_dot0 = psi0.clone();
    psi_dot0.scale(rate);
    InitialData::new(psi0, psi_dot0)
}

/// Unit-norm Gaussian packet with carrier `k0`, centred at `x0`, width
/// `sigma`, assigned wholly to one branch (the time derivative is
/// synthesized spectrally as -/+ i omega_pm per mode).
pub fn gaussian_packet(
    x0: &[f64],
    k0: &[f64],
    sigma: f64,
    branch: Branch,
    grid: &Arc<SpectralGrid>,
    params: &PhysicalParams,
) -> Result<InitialData> {
    let dim = grid.dim();
    if x0.len() != dim || k0.len() != dim {
        return Err(RelwaveError::domain(format!(
            "x0 and k0 must have {dim} components"
        )));
    }
    // The packet must be resolvable: a few samples per width, and narrow
    // enough that the periodic images do not overlap.
    if !(sigma >= 2.0 * grid.dx() && sigma <= grid.box_length() / 8.0) {
        return Err(RelwaveError::domain(format!(
            "unresolvable packet width sigma = {sigma} on dx = {}, box = {}",
            grid.dx(),
            grid.box_length()
        )));
    }
    // Built directly in k space as the periodization of
    // `exp(i k0 x) exp(-|x - x0|^2 / 4 sigma^2)`: the mode weights are
    // `exp(-sigma^2 |k - k0|^2) exp(-i (k - k0) x0)`. Unlike pointwise
    // sampling of an off-lattice carrier, this is smooth on the torus, so
    // the spectrum decays at the true Gaussian rate (to exact zeros once it
    // underflows) instead of flooring on a boundary-jump tail.
    let n = grid.n_total();
    let mut values = Vec::with_capacity(n);
    for m in 0..n {
        let k = grid.k_vec(m);
        let mut q2 = 0.0;
        let mut phase = 0.0;
        for a in 0..dim {
            let d = k[a] - k0[a];
            q2 += d * d;
            phase -= d * x0[a];
        }
        values.push(Complex64::from_polar((-sigma * sigma * q2).exp(), phase));
    }
    let psi0 =
        ComplexField::from_values(grid.clone(), values, Representation::Spectral)?.normalized()?;

    let psi_dot0 = psi0.apply_symbol(|i| {
        let k = grid.k_squared(i).sqrt();
        let omega = omega_branch(k, branch, params);
        match branch {
            Branch::Plus => Complex64::new(0.0, -omega),
            Branch::Minus => Complex64::new(0.0, omega),
        }
    });
    InitialData::new(psi0, psi_dot0)
}

/// Split initial data into branch amplitudes by solving, per mode,
/// `psi_k = A + B`, `psi_dot_k = -i omega_plus A + i omega_minus B`.
/// The system is never singular since `omega_plus + omega_minus > 0`.
pub fn split(data: &InitialData, params: &PhysicalParams) -> Result<ModeAmplitudes> {
    let grid = data.psi0.grid().clone();
    let psi = data.psi0.to_spectral();
    let psi_dot = data.psi_dot0.to_spectral();
    let n = grid.n_total();
    let mut psi_plus = Vec::with_capacity(n);
    let mut psi_minus = Vec::with_capacity(n);
    let i = Complex64::i();
    for m in 0..n {
        let k = grid.k_squared(m).sqrt();
        let wp = omega_branch(k, Branch::Plus, params);
        let wm = omega_branch(k, Branch::Minus, params);
        let denom = wp + wm;
        let p = psi.values()[m];
        let d = psi_dot.values()[m];
        psi_plus.push((wm * p + i * d) / denom);
        psi_minus.push((wp * p - i * d) / denom);
    }
    Ok(ModeAmplitudes {
        grid,
        params: *params,
        psi_plus,
        psi_minus,
    })
}

impl ModeAmplitudes {
    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn plus(&self) -> &[Complex64] {
        &self.psi_plus
    }

    pub fn minus(&self) -> &[Complex64] {
        &self.psi_minus
    }

    pub fn plus_mut(&mut self) -> &mut [Complex64] {
        &mut self.psi_plus
    }

    pub fn minus_mut(&mut self) -> &mut [Complex64] {
        &mut self.psi_minus
    }

    /// `sum |c_k|^2 dV` of one branch (equals the position-space norm of a
    /// single-branch state).
    pub fn branch_norm_sq(&self, branch: Branch) -> f64 {
        let w = self.grid.cell_volume();
        let coeffs = match branch {
            Branch::Plus => &self.psi_plus,
            Branch::Minus => &self.psi_minus,
        };
        coeffs.iter().map(|c| c.norm_sqr() * w).sum()
    }

    fn omega(&self, flat: usize, branch: Branch) -> f64 {
        omega_branch(self.grid.k_squared(flat).sqrt(), branch, &self.params)
    }

    /// The field at time t, in spectral representation. Modes that are zero
    /// in both branches stay exactly zero, which matters when high-order
    /// differential symbols are applied afterwards.
    pub fn psi_spectral_at(&self, t: f64) -> ComplexField {
        let n = self.grid.n_total();
        let values = (0..n)
            .map(|m| {
                let wp = self.omega(m, Branch::Plus);
                let wm = self.omega(m, Branch::Minus);
                self.psi_plus[m] * Complex64::from_polar(1.0, -wp * t)
                    + self.psi_minus[m] * Complex64::from_polar(1.0, wm * t)
            })
            .collect();
        ComplexField::from_values(self.grid.clone(), values, Representation::Spectral)
            .expect("length matches grid")
    }

    /// Exact time derivative of the field at time t, in spectral
    /// representation.
    pub fn psi_dot_spectral_at(&self, t: f64) -> ComplexField {
        let n = self.grid.n_total();
        let i = Complex64::i();
        let values = (0..n)
            .map(|m| {
                let wp = self.omega(m, Branch::Plus);
                let wm = self.omega(m, Branch::Minus);
                -i * wp * self.psi_plus[m] * Complex64::from_polar(1.0, -wp * t)
                    + i * wm * self.psi_minus[m] * Complex64::from_polar(1.0, wm * t)
            })
            .collect();
        ComplexField::from_values(self.grid.clone(), values, Representation::Spectral)
            .expect("length matches grid")
    }

    /// Exact second time derivative of the field at time t, in spectral
    /// representation.
    pub fn psi_ddot_spectral_at(&self, t: f64) -> ComplexField {
        let n = self.grid.n_total();
        let values = (0..n)
            .map(|m| {
                let wp = self.omega(m, Branch::Plus);
                let wm = self.omega(m, Branch::Minus);
                -self.psi_plus[m] * wp * wp * Complex64::from_polar(1.0, -wp * t)
                    - self.psi_minus[m] * wm * wm * Complex64::from_polar(1.0, wm * t)
            })
            .collect();
        ComplexField::from_values(self.grid.clone(), values, Representation::Spectral)
            .expect("length matches grid")
    }

    /// The field at time t, in physical representation.
    pub fn psi_at(&self, t: f64) -> ComplexField {
        self.psi_spectral_at(t).to_physical()
    }

    /// Exact spectral time derivative of the field at time t.
    pub fn psi_dot_at(&self, t: f64) -> ComplexField {
        self.psi_dot_spectral_at(t).to_physical()
    }

    /// Exact spectral second time derivative of the field at time t.
    pub fn psi_ddot_at(&self, t: f64) -> ComplexField {
        self.psi_ddot_spectral_at(t).to_physical()
    }

    /// Generalized momentum field at time t, built mode by mode with the
    /// `sqrt(mu^2 + k^2)/mu` weight of the canonical-momentum expansion.
    pub fn pi_at(&self, t: f64) -> ComplexField {
        let n = self.grid.n_total();
        let params = &self.params;
        let half_i_hbar = Complex64::new(0.0, 0.5 * params.hbar);
        let mut values = vec![Complex64::default(); n];
        for m in 0..n {
            let k = self.grid.k_squared(m).sqrt();
            let weight = params.mu.hypot(k) / params.mu;
            let wp = self.omega(m, Branch::Plus);
            let wm = self.omega(m, Branch::Minus);
            let coeff = half_i_hbar
                * weight
                * (self.psi_plus[m].conj() * Complex64::from_polar(1.0, wp * t)
                    - self.psi_minus[m].conj() * Complex64::from_polar(1.0, -wm * t));
            // pi carries the conjugate plane wave e^{-ikx}.
            values[self.grid.negated_index(m)] += coeff;
        }
        ComplexField::from_values(self.grid.clone(), values, Representation::Spectral)
            .expect("length matches grid")
            .to_physical()
    }

    /// Field and generalized momentum at time t.
    pub fn reconstruct(&self, t: f64) -> (ComplexField, ComplexField) {
        (self.psi_at(t), self.pi_at(t))
    }

    /// Rescaled amplitudes `a = (mu^2 + k^2)^{1/4} / sqrt(mu) * psi`, in
    /// which energy and momentum take the diagonal closed forms.
    pub fn to_a_amplitudes(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let weight = |m: usize| {
            let k2 = self.grid.k_squared(m);
            ((self.params.mu * self.params.mu + k2).sqrt() / self.params.mu).sqrt()
        };
        let a_plus = (0..self.psi_plus.len())
            .map(|m| self.psi_plus[m] * weight(m))
            .collect();
        let a_minus = (0..self.psi_minus.len())
            .map(|m| self.psi_minus[m] * weight(m))
            .collect();
        (a_plus, a_minus)
    }

    /// Total energy from the k-space closed form `sum hbar omega |a|^2`.
    pub fn total_energy(&self) -> f64 {
        let (a_plus, a_minus) = self.to_a_amplitudes();
        let w = self.grid.cell_volume();
        let hbar = self.params.hbar;
        (0..a_plus.len())
            .map(|m| {
                hbar * self.omega(m, Branch::Plus) * a_plus[m].norm_sqr() * w
                    + hbar * self.omega(m, Branch::Minus) * a_minus[m].norm_sqr() * w
            })
            .sum()
    }

    /// Total momentum from the k-space closed form `sum hbar k |a|^2`.
    pub fn total_momentum(&self) -> Vec<f64> {
        let (a_plus, a_minus) = self.to_a_amplitudes();
        let w = self.grid.cell_volume();
        let hbar = self.params.hbar;
        let dim = self.grid.dim();
        let mut total = vec![0.0; dim];
        for m in 0..a_plus.len() {
            let k = self.grid.k_vec(m);
            let weight = hbar * (a_plus[m].norm_sqr() + a_minus[m].norm_sqr()) * w;
            for a in 0..dim {
                total[a] += k[a] * weight;
            }
        }
        total
    }
}
