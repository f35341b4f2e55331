//! Finite-mode, truncated-occupation Fock-space validator for the
//! second-quantized theory: ladder-operator matrices, commutation relations,
//! normal-ordered energy/momentum/number generators, vacuum energy, and the
//! field–momentum commutator function Δ.
//!
//! Everything is built as dense complex matrices over the occupation basis of
//! a handful of modes, capped at a few thousand dimensions. This module is a
//! validator, not a production solver: dense matrices keep every check
//! sub-second and trivially auditable against pencil-and-paper expectations.
//!
//! Discretization conventions (box regularization): the continuum
//! `δ(k − k')` becomes `δ_{kk'} / dV_k` and `∫dk` becomes `Σ_k dV_k` with
//! `dV_k = 2π/V`; `δ(0) ↦ V/2π`. Two boson species live on each mode: `a`
//! (the (+) branch) and `b` (the (−) branch after the sign-flipped
//! commutator is mapped to standard Bose form), with `b†(k)` creating
//! momentum `+ħk`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::{omega_branch, Branch};
use crate::error::RelwaveError;
use crate::units::PhysicalParams;
use crate::Result;

/// Dense complex operator on the occupation basis of a [`FockSpace`].
pub type OperatorMatrix = DMatrix<Complex64>;

/// Hard ceiling on the Fock dimension unless overridden by the
/// `RELWAVE_MAX_FOCK_DIM` environment variable.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Boson species: `a` quanta on the (+) branch, `b` quanta on the (−) branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    A,
    B,
}

/// Truncated-occupation Fock space over an ordered list of 1-d wavenumbers.
///
/// The basis is the set of occupation tuples `(n^a_0, …, n^a_{M-1},
/// n^b_0, …, n^b_{M-1})` with each entry in `0..=n_max`, enumerated in
/// mixed-radix order with the first slot slowest; `dim = (n_max+1)^{2M}`.
#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: Vec<f64>,
    n_max: usize,
    dim: usize,
}

fn max_dim_cap() -> usize {
    std::env::var("RELWAVE_MAX_FOCK_DIM")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(DEFAULT_MAX_DIM)
}

impl FockSpace {
    /// Build the space, refusing dimensions above the configured cap.
    pub fn new(modes: Vec<f64>, n_max: usize) -> Result<Self> {
        if modes.is_empty() {
            return Err(RelwaveError::domain("at least one mode is required"));
        }
        if n_max == 0 {
            return Err(RelwaveError::domain("n_max must be at least 1"));
        }
        let cap = max_dim_cap();
        let levels = n_max + 1;
        let slots = 2 * modes.len();
        let mut dim = 1usize;
        for _ in 0..slots {
            dim = dim.checked_mul(levels).filter(|&d| d <= cap).ok_or_else(|| {
                RelwaveError::Resource(format!(
                    "Fock dimension (n_max+1)^(2M) = {levels}^{slots} exceeds the cap {cap} \
                     (override with RELWAVE_MAX_FOCK_DIM)"
                ))
            })?;
        }
        Ok(FockSpace { modes, n_max, dim })
    }

    pub fn modes(&self) -> &[f64] {
        &self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slots(&self) -> usize {
        2 * self.modes.len()
    }

    fn slot(&self, species: Species, mode_idx: usize) -> usize {
        match species {
            Species::A => mode_idx,
            Species::B => self.modes.len() + mode_idx,
        }
    }

    /// Occupation of `slot` in basis state `index` (mixed radix, slot 0
    /// slowest).
    pub fn occupation(&self, index: usize, slot: usize) -> usize {
        let base = self.n_max + 1;
        let place = self.slots() - 1 - slot;
        (index / base.pow(place as u32)) % base
    }

    /// True if every occupation of the basis state is strictly below
    /// `n_max`, i.e. the state is away from the truncation edge where
    /// `[a, a†]` is distorted.
    pub fn below_truncation(&self, index: usize) -> bool {
        (0..self.slots()).all(|s| self.occupation(index, s) < self.n_max)
    }

    /// Basis index of the vacuum (all occupations zero).
    pub fn vacuum_index(&self) -> usize {
        0
    }

    /// Annihilation operator for one (species, mode) slot: lowers that
    /// occupation by one with amplitude `√n`, identity elsewhere.
    pub fn annihilator(&self, species: Species, mode_idx: usize) -> OperatorMatrix {
        let slot = self.slot(species, mode_idx);
        let base = self.n_max + 1;
        let place = self.slots() - 1 - slot;
        let stride = base.pow(place as u32);
        let mut m = OperatorMatrix::zeros(self.dim, self.dim);
        for col in 0..self.dim {
            let n = (col / stride) % base;
            if n > 0 {
                // a |…, n, …⟩ = √n |…, n−1, …⟩
                let row = col - stride;
                m[(row, col)] = Complex64::new((n as f64).sqrt(), 0.0);
            }
        }
        m
    }

    /// Creation operator (adjoint of the annihilator).
    pub fn creator(&self, species: Species, mode_idx: usize) -> OperatorMatrix {
        self.annihilator(species, mode_idx).adjoint()
    }

    /// Exact sparse form of the annihilator (entries `√n` kept as surds).
    pub fn annihilator_exact(&self, species: Species, mode_idx: usize) -> LadderOp {
        let slot = self.slot(species, mode_idx);
        let base = self.n_max + 1;
        let place = self.slots() - 1 - slot;
        let stride = base.pow(place as u32);
        let mut terms = Vec::new();
        for col in 0..self.dim {
            let n = (col / stride) % base;
            if n > 0 {
                terms.push((col - stride, col, 1i64, n as u128));
            }
        }
        LadderOp {
            dim: self.dim,
            terms,
        }
    }

    /// Number operator for one (species, mode) slot; diagonal with the
    /// occupation as entry, so it is exact in integer arithmetic.
    pub fn number(&self, species: Species, mode_idx: usize) -> OperatorMatrix {
        let slot = self.slot(species, mode_idx);
        OperatorMatrix::from_fn(self.dim, self.dim, |r, c| {
            if r == c {
                Complex64::new(self.occupation(r, slot) as f64, 0.0)
            } else {
                Complex64::default()
            }
        })
    }
}

/// Sparse operator whose entries are `coeff · √radicand` with integer
/// radicands. Elementary ladder operators have at most one nonzero per row
/// and column, so any product of two of them has exactly one surd per entry;
/// commutators can therefore be evaluated in integer arithmetic, making the
/// Bose-algebra checks exact rather than merely 1e-15-accurate (a float
/// matmul would leave √2·√2 − 2 ≈ 4e-16 residues).
#[derive(Debug, Clone)]
pub struct LadderOp {
    dim: usize,
    /// (row, col, coefficient, radicand); at most one term per (row, col).
    terms: Vec<(usize, usize, i64, u128)>,
}

impl LadderOp {
    /// Adjoint: transpose (all coefficients here are real).
    pub fn adjoint(&self) -> LadderOp {
        LadderOp {
            dim: self.dim,
            terms: self.terms.iter().map(|&(r, c, s, q)| (c, r, s, q)).collect(),
        }
    }

    /// Exact product; surds multiply as `√q1·√q2 = √(q1 q2)`.
    pub fn multiply(&self, other: &LadderOp) -> LadderOp {
        use std::collections::HashMap;
        let mut acc: HashMap<(usize, usize, u128), i64> = HashMap::new();
        for &(r1, c1, s1, q1) in &self.terms {
            for &(r2, c2, s2, q2) in &other.terms {
                if c1 == r2 {
                    *acc.entry((r1, c2, q1 * q2)).or_insert(0) += s1 * s2;
                }
            }
        }
        let mut terms: Vec<_> = acc
            .into_iter()
            .filter(|&(_, s)| s != 0)
            .map(|((r, c, q), s)| (r, c, s, q))
            .collect();
        terms.sort_unstable();
        LadderOp { dim: self.dim, terms }
    }

    /// Exact commutator `[self, other]`.
    pub fn commutator(&self, other: &LadderOp) -> LadderOp {
        use std::collections::HashMap;
        let mut acc: HashMap<(usize, usize, u128), i64> = HashMap::new();
        for &(r, c, s, q) in &self.multiply(other).terms {
            *acc.entry((r, c, q)).or_insert(0) += s;
        }
        for &(r, c, s, q) in &other.multiply(self).terms {
            *acc.entry((r, c, q)).or_insert(0) -= s;
        }
        let mut terms: Vec<_> = acc
            .into_iter()
            .filter(|&(_, s)| s != 0)
            .map(|((r, c, q), s)| (r, c, s, q))
            .collect();
        terms.sort_unstable();
        LadderOp { dim: self.dim, terms }
    }

    /// Entry value; exact when the radicand is a perfect square (always the
    /// case for commutators of same-slot ladder pairs).
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.terms
            .iter()
            .filter(|&&(r, c, _, _)| r == row && c == col)
            .map(|&(_, _, s, q)| s as f64 * (q as f64).sqrt())
            .sum()
    }

    /// Dense f64 realization.
    pub fn to_dense(&self) -> OperatorMatrix {
        let mut m = OperatorMatrix::zeros(self.dim, self.dim);
        for &(r, c, s, q) in &self.terms {
            m[(r, c)] += Complex64::new(s as f64 * (q as f64).sqrt(), 0.0);
        }
        m
    }

    /// Max |entry| over rows/columns restricted by `keep`. Each entry sums
    /// its surd terms; radicands arising in commutators are perfect squares,
    /// whose square roots are exact in f64, so cancellations are exact too.
    fn max_abs_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        use std::collections::HashMap;
        let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
        for &(r, c, s, q) in &self.terms {
            if keep(r) && keep(c) {
                *entries.entry((r, c)).or_insert(0.0) += s as f64 * (q as f64).sqrt();
            }
        }
        entries.values().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    a * b - b * a
}

/// Largest entry magnitude of `m` over rows and columns restricted to
/// basis states below the truncation edge.
fn max_abs_sub_truncation(space: &FockSpace, m: &OperatorMatrix) -> f64 {
    let mut max = 0.0f64;
    for r in 0..space.dim() {
        if !space.below_truncation(r) {
            continue;
        }
        for c in 0..space.dim() {
            if space.below_truncation(c) {
                max = max.max(m[(r, c)].norm());
            }
        }
    }
    max
}

/// Commutation-relation audit of the ladder algebra.
#[derive(Debug, Clone, Serialize)]
pub struct CommutatorReport {
    /// Max deviation of `[a_k, a†_k] − 1` (and the `b` analogue) on the
    /// sub-truncation subspace; exactly zero for a correct construction.
    pub same_mode_deviation: f64,
    /// Max magnitude over all distinct-slot commutators `[a, a†]`, `[a, a]`
    /// and cross-species `[a, b]`, `[a, b†]`; exactly zero everywhere.
    pub cross_deviation: f64,
}

/// Check the Bose algebra on `space`. Same-(species, mode) commutators are
/// compared to the identity on the sub-truncation subspace (at occupation
/// `n_max` the truncated `[a, a†]` is `−n_max`, a documented artifact);
/// everything else must vanish on the whole space.
pub fn commutator_check(space: &FockSpace) -> CommutatorReport {
    let m = space.modes().len();
    let species = [Species::A, Species::B];
    let mut same = 0.0f64;
    let mut cross = 0.0f64;
    for (si, &s1) in species.iter().enumerate() {
        for i in 0..m {
            let a1 = space.annihilator_exact(s1, i);
            for (sj, &s2) in species.iter().enumerate() {
                for j in 0..m {
                    let a2 = space.annihilator_exact(s2, j);
                    let c_aa = a1.commutator(&a2);
                    cross = cross.max(c_aa.max_abs_where(|_| true));
                    let mut c_ad = a1.commutator(&a2.adjoint());
                    if si == sj && i == j {
                        // Subtract the identity (coefficient 1, radicand 1);
                        // the merge collapses e.g. √(n·n) − 1·n to zero in
                        // integer arithmetic.
                        for d in 0..space.dim() {
                            c_ad.terms.push((d, d, -1, 1));
                        }
                        same = same.max(
                            merge_terms(c_ad)
                                .max_abs_where(|idx| space.below_truncation(idx)),
                        );
                    } else {
                        cross = cross.max(c_ad.max_abs_where(|_| true));
                    }
                }
            }
        }
    }
    CommutatorReport {
        same_mode_deviation: same,
        cross_deviation: cross,
    }
}

/// Combine duplicate (row, col, radicand) terms, dropping exact zeros.
fn merge_terms(op: LadderOp) -> LadderOp {
    use std::collections::HashMap;
    let mut acc: HashMap<(usize, usize, u128), i64> = HashMap::new();
    for &(r, c, s, q) in &op.terms {
        *acc.entry((r, c, q)).or_insert(0) += s;
    }
    let mut terms: Vec<_> = acc
        .into_iter()
        .filter(|&(_, s)| s != 0)
        .map(|((r, c, q), s)| (r, c, s, q))
        .collect();
    terms.sort_unstable();
    LadderOp { dim: op.dim, terms }
}

/// The diagonal generators of the truncated theory.
#[derive(Debug, Clone)]
pub struct Generators {
    /// Normal-ordered energy: `Σ_k ħω₊(k) a†a + ħω₋(k) b†b`.
    pub h: OperatorMatrix,
    /// Momentum: `Σ_k ħk (a†a + b†b)` (1-d, so a single component).
    pub p: OperatorMatrix,
    /// Number operators per species.
    pub n_plus: OperatorMatrix,
    pub n_minus: OperatorMatrix,
    /// Symmetrized energy: normal-ordered `h` plus the zero-point constant
    /// `E₀ = Σ_k ħc√(μ² + k²)`.
    pub h_symmetrized: OperatorMatrix,
    /// The zero-point energy `E₀`.
    pub vacuum_energy: f64,
}

/// Build H, P and the number operators. All are diagonal in the occupation
/// basis, so eigenchecks against them are exact.
pub fn build_generators(space: &FockSpace, params: &PhysicalParams) -> Generators {
    let dim = space.dim();
    let mut h = OperatorMatrix::zeros(dim, dim);
    let mut p = OperatorMatrix::zeros(dim, dim);
    let mut n_plus = OperatorMatrix::zeros(dim, dim);
    let mut n_minus = OperatorMatrix::zeros(dim, dim);
    let mut e0 = 0.0;
    for (i, &k) in space.modes().iter().enumerate() {
        let omega_p = omega_branch(k, Branch::Plus, params);
        let omega_m = omega_branch(k, Branch::Minus, params);
        // The symmetrized form adds ½(ħω₊ + ħω₋) = ħc√(μ²+k²) per mode.
        e0 += params.hbar * params.c * params.mu.hypot(k);
        let na = space.number(Species::A, i);
        let nb = space.number(Species::B, i);
        h += na.map(|v| v * params.hbar * omega_p) + nb.map(|v| v * params.hbar * omega_m);
        p += (&na + &nb).map(|v| v * params.hbar * k);
        n_plus += na;
        n_minus += nb;
    }
    let h_symmetrized = &h + OperatorMatrix::identity(dim, dim).map(|v| v * e0);
    Generators {
        h,
        p,
        n_plus,
        n_minus,
        h_symmetrized,
        vacuum_energy: e0,
    }
}

/// One row of the one-particle eigenvalue audit.
#[derive(Debug, Clone, Serialize)]
pub struct EigenRow {
    pub k: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// `|H a†_k|0⟩ − ħω₊ a†_k|0⟩|` and the (−) analogue; exactly zero.
    pub h_plus_deviation: f64,
    pub h_minus_deviation: f64,
    /// `|P a†_k|0⟩ − ħk a†_k|0⟩|` per species; exactly zero.
    pub p_plus_deviation: f64,
    pub p_minus_deviation: f64,
}

fn one_particle_state(space: &FockSpace, species: Species, mode_idx: usize) -> OperatorMatrix {
    let mut vac = OperatorMatrix::zeros(space.dim(), 1);
    vac[(space.vacuum_index(), 0)] = Complex64::new(1.0, 0.0);
    space.creator(species, mode_idx) * vac
}

/// Verify that one-particle states are exact eigenvectors of H and P with
/// eigenvalues `ħω_±(k)` and `ħk`.
pub fn one_particle_check(space: &FockSpace, params: &PhysicalParams) -> Vec<EigenRow> {
    let gens = build_generators(space, params);
    space
        .modes()
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let omega_p = omega_branch(k, Branch::Plus, params);
            let omega_m = omega_branch(k, Branch::Minus, params);
            let plus = one_particle_state(space, Species::A, i);
            let minus = one_particle_state(space, Species::B, i);
            let dev = |m: &OperatorMatrix, v: &OperatorMatrix, lambda: f64| {
                (m * v - v.map(|x| x * lambda)).map(|x| x.norm()).max()
            };
            EigenRow {
                k,
                omega_plus: omega_p,
                omega_minus: omega_m,
                h_plus_deviation: dev(&gens.h, &plus, params.hbar * omega_p),
                h_minus_deviation: dev(&gens.h, &minus, params.hbar * omega_m),
                p_plus_deviation: dev(&gens.p, &plus, params.hbar * k),
                p_minus_deviation: dev(&gens.p, &minus, params.hbar * k),
            }
        })
        .collect()
}

/// Require the modes to be a complete 1-d lattice (consecutive multiples of
/// a single spacing `dk`), and return `(dk, volume)`.
fn lattice_geometry(space: &FockSpace) -> Result<(f64, f64)> {
    let mut sorted = space.modes().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite wavenumbers"));
    if sorted.len() < 2 {
        // A single mode is trivially a complete (one-point) lattice; pick
        // the spacing from the mode itself when nonzero, else unit box.
        let dk = sorted[0].abs().max(2.0 * std::f64::consts::PI);
        return Ok((dk, 2.0 * std::f64::consts::PI / dk));
    }
    let dk = sorted[1] - sorted[0];
    if !(dk > 0.0) {
        return Err(RelwaveError::domain("modes must be distinct"));
    }
    for w in sorted.windows(2) {
        if ((w[1] - w[0]) - dk).abs() > 1e-9 * dk {
            return Err(RelwaveError::domain(
                "modes must form a complete lattice (consecutive multiples of one spacing)",
            ));
        }
    }
    Ok((dk, 2.0 * std::f64::consts::PI / dk))
}

/// Field operator `ψ(x, t) = (2V)^{-1/2} Σ_k [a_k e^{i(kx − ω₊t)}
/// + b†_k e^{−i(kx − ω₋t)}]` as a dense matrix.
pub fn psi_operator(
    space: &FockSpace,
    params: &PhysicalParams,
    x: f64,
    t: f64,
) -> Result<OperatorMatrix> {
    let (_, volume) = lattice_geometry(space)?;
    let norm = 1.0 / (2.0 * volume).sqrt();
    let mut out = OperatorMatrix::zeros(space.dim(), space.dim());
    for (i, &k) in space.modes().iter().enumerate() {
        let omega_p = omega_branch(k, Branch::Plus, params);
        let omega_m = omega_branch(k, Branch::Minus, params);
        let phase_a = Complex64::from_polar(norm, k * x - omega_p * t);
        let phase_b = Complex64::from_polar(norm, -(k * x) + omega_m * t);
        out += space.annihilator(Species::A, i).map(|v| v * phase_a)
            + space.creator(Species::B, i).map(|v| v * phase_b);
    }
    Ok(out)
}

/// Conjugate-momentum operator `π(x, t) = iħ (2V)^{-1/2} Σ_k
/// [a†_k e^{−i(kx − ω₊t)} − b_k e^{i(kx − ω₋t)}]`, normalized so that
/// `[ψ(t,x), π(t',x')] = iħ Δ(t−t', x−x')`.
pub fn pi_operator(
    space: &FockSpace,
    params: &PhysicalParams,
    x: f64,
    t: f64,
) -> Result<OperatorMatrix> {
    let (_, volume) = lattice_geometry(space)?;
    let norm = params.hbar / (2.0 * volume).sqrt();
    let i_unit = Complex64::new(0.0, 1.0);
    let mut out = OperatorMatrix::zeros(space.dim(), space.dim());
    for (idx, &k) in space.modes().iter().enumerate() {
        let omega_p = omega_branch(k, Branch::Plus, params);
        let omega_m = omega_branch(k, Branch::Minus, params);
        let phase_a = i_unit * Complex64::from_polar(norm, -(k * x) + omega_p * t);
        let phase_b = -i_unit * Complex64::from_polar(norm, k * x - omega_m * t);
        out += space.creator(Species::A, idx).map(|v| v * phase_a)
            + space.annihilator(Species::B, idx).map(|v| v * phase_b);
    }
    Ok(out)
}

/// Closed-form box Δ-function:
/// `Δ(Δt, Δx) = (1/2V) Σ_k [e^{i(kΔx − ω₊Δt)} + e^{−i(kΔx − ω₋Δt)}]`.
/// At `Δt = 0`, completeness of the mode lattice collapses it to the
/// discrete delta `δ_{Δx,0}/dV` with `dV = V/M`.
pub fn delta_function(space: &FockSpace, params: &PhysicalParams, dt: f64, dx: f64) -> Result<Complex64> {
    let (_, volume) = lattice_geometry(space)?;
    let mut sum = Complex64::default();
    for &k in space.modes() {
        let omega_p = omega_branch(k, Branch::Plus, params);
        let omega_m = omega_branch(k, Branch::Minus, params);
        sum += Complex64::from_polar(1.0, k * dx - omega_p * dt);
        sum += Complex64::from_polar(1.0, -(k * dx) + omega_m * dt);
    }
    Ok(sum / (2.0 * volume))
}

/// One entry of the Δ-function audit table.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaRow {
    pub dt: f64,
    pub dx: f64,
    pub delta_re: f64,
    pub delta_im: f64,
    /// Max deviation of `[ψ, π] − iħΔ·I` on the sub-truncation subspace.
    pub residual: f64,
}

/// Compare the operator commutator `[ψ(t, x), π(t', x')]` against
/// `iħ Δ(t−t', x−x')·I` for every pairing of the given offsets. The modes
/// must form a complete lattice; otherwise Δ loses its delta-at-equal-time
/// property and a domain error is returned.
pub fn field_commutator_delta(
    space: &FockSpace,
    params: &PhysicalParams,
    t_offsets: &[f64],
    x_offsets: &[f64],
) -> Result<Vec<DeltaRow>> {
    lattice_geometry(space)?;
    // ψ and π depend on (t, x) only through the offsets, so evaluate one
    // operator at the origin and the other at (dt, dx).
    let pi0 = pi_operator(space, params, 0.0, 0.0)?;
    let mut rows = Vec::with_capacity(t_offsets.len() * x_offsets.len());
    for &dt in t_offsets {
        for &dx in x_offsets {
            let psi = psi_operator(space, params, dx, dt)?;
            let delta = delta_function(space, params, dt, dx)?;
            let expected = Complex64::new(0.0, params.hbar) * delta;
            let eye = OperatorMatrix::identity(space.dim(), space.dim());
            let resid = commutator(&psi, &pi0) - eye.map(|v| v * expected);
            rows.push(DeltaRow {
                dt,
                dx,
                delta_re: delta.re,
                delta_im: delta.im,
                residual: max_abs_sub_truncation(space, &resid),
            });
        }
    }
    Ok(rows)
}

/// Full audit bundle for the `quantize` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct QuantizationReport {
    pub modes: Vec<f64>,
    pub n_max: usize,
    pub dim: usize,
    pub commutators: CommutatorReport,
    pub eigenchecks: Vec<EigenRow>,
    /// `⟨0|H_symmetrized|0⟩` and the closed form `Σ_k ħc√(μ²+k²)`.
    pub vacuum_energy: f64,
    pub vacuum_energy_expected: f64,
    /// `|[ψ(x), π(x)] − iħ/dV|` at equal time, sub-truncation subspace.
    pub equal_time_commutator_deviation: f64,
    pub delta_checks: Vec<DeltaRow>,
}

/// Run every audit on one space. Time offsets for the Δ table default to
/// five nonzero values spread over one Compton period.
pub fn quantization_report(
    space: &FockSpace,
    params: &PhysicalParams,
) -> Result<QuantizationReport> {
    let gens = build_generators(space, params);
    let vac = space.vacuum_index();
    let vacuum_energy = gens.h_symmetrized[(vac, vac)].re;
    let expected: f64 = space
        .modes()
        .iter()
        .map(|&k| params.hbar * params.c * params.mu.hypot(k))
        .sum();

    let (dk, volume) = lattice_geometry(space)?;
    let dv = volume / space.modes().len() as f64;
    let equal_time = field_commutator_delta(space, params, &[0.0], &[0.0])?;
    // Sanity-anchor the equal-time deviation against the box form iħ/dV.
    let anchored = {
        let row = &equal_time[0];
        let delta = Complex64::new(row.delta_re, row.delta_im);
        let box_form = Complex64::new(1.0 / dv, 0.0);
        row.residual + (delta - box_form).norm() * params.hbar
    };

    let period = 2.0 * std::f64::consts::PI / (params.mu * params.c);
    let t_offsets: Vec<f64> = (1..=5).map(|i| i as f64 * period / 7.0).collect();
    let dx_lattice = 2.0 * std::f64::consts::PI / (dk * space.modes().len() as f64);
    let delta_checks =
        field_commutator_delta(space, params, &t_offsets, &[0.0, dx_lattice])?;

    Ok(QuantizationReport {
        modes: space.modes().to_vec(),
        n_max: space.n_max(),
        dim: space.dim(),
        commutators: commutator_check(space),
        eigenchecks: one_particle_check(space, params),
        vacuum_energy,
        vacuum_energy_expected: expected,
        equal_time_commutator_deviation: anchored,
        delta_checks,
    })
}
