//! Periodic d-dimensional sampling grid with a unitary discrete Fourier
//! transform, wavenumber lattice, and exact spectral application of the
//! gradient and of integer powers of the Laplacian.
//!
//! Conventions:
//! - the DFT is unitary (symmetric `1/sqrt(N)` both ways), so Parseval holds
//!   literally between the two representations;
//! - wavenumbers follow the usual FFT ordering `0, dk, .., -2 dk, -dk` with
//!   `dk = 2 pi / box_length`; the Nyquist mode of an even grid is stored at
//!   `-n/2 * dk`;
//! - odd-order derivative symbols zero the Nyquist mode, whose derivative
//!   sign is ambiguous on an even grid.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::RelwaveError;
use crate::Result;

/// Which space a field's samples currently live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

/// Periodic sampling grid, cubic box, same point count per axis.
pub struct SpectralGrid {
    dim: usize,
    n_per_axis: usize,
    box_length: f64,
    k_axis: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("dim", &self.dim)
            .field("n_per_axis", &self.n_per_axis)
            .field("box_length", &self.box_length)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, n_per_axis: usize, box_length: f64) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(RelwaveError::domain(format!("dim must be 1..=3, got {dim}")));
        }
        if n_per_axis == 0 || n_per_axis % 2 != 0 {
            return Err(RelwaveError::domain(format!(
                "n_per_axis must be even and positive, got {n_per_axis}"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(RelwaveError::domain(format!(
                "box_length must be strictly positive, got {box_length}"
            )));
        }
        let dk = 2.0 * std::f64::consts::PI / box_length;
        let n = n_per_axis as isize;
        let k_axis = (0..n)
            .map(|j| {
                let j_signed = if j <= n / 2 - 1 { j } else { j - n };
                // Nyquist (j == n/2) lands on -n/2 * dk.
                let j_signed = if j == n / 2 { -(n / 2) } else { j_signed };
                j_signed as f64 * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(SpectralGrid {
            dim,
            n_per_axis,
            box_length,
            k_axis,
            fft_forward: planner.plan_fft(n_per_axis, FftDirection::Forward),
            fft_inverse: planner.plan_fft(n_per_axis, FftDirection::Inverse),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of samples, `n^dim`.
    pub fn n_total(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Physical cell volume `dV = V / N`.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.n_total() as f64
    }

    /// Wavenumber lattice spacing per axis.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    /// Spectral cell volume `dVk = dk^dim`.
    pub fn spectral_cell_volume(&self) -> f64 {
        self.dk().powi(self.dim as i32)
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n_per_axis as f64
    }

    /// Wavenumber values along one axis in FFT ordering.
    pub fn k_axis(&self) -> &[f64] {
        &self.k_axis
    }

    /// Per-axis lattice indices of a flat sample index (axis 0 slowest).
    pub fn axis_indices(&self, flat: usize) -> [usize; 3] {
        let n = self.n_per_axis;
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rem % n;
            rem /= n;
        }
        idx
    }

    /// Wavenumber vector at a flat spectral index.
    pub fn k_vec(&self, flat: usize) -> [f64; 3] {
        let idx = self.axis_indices(flat);
        let mut k = [0.0; 3];
        for a in 0..self.dim {
            k[a] = self.k_axis[idx[a]];
        }
        k
    }

    /// `|k|^2` at a flat spectral index.
    pub fn k_squared(&self, flat: usize) -> f64 {
        let k = self.k_vec(flat);
        k.iter().map(|v| v * v).sum()
    }

    /// Physical position vector at a flat sample index.
    pub fn x_vec(&self, flat: usize) -> [f64; 3] {
        let idx = self.axis_indices(flat);
        let dx = self.dx();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * dx;
        }
        x
    }

    /// Flat index of the mode at `-k`. The Nyquist index maps to itself.
    pub fn negated_index(&self, flat: usize) -> usize {
        let n = self.n_per_axis;
        let idx = self.axis_indices(flat);
        let mut out = 0usize;
        for a in 0..self.dim {
            out = out * n + (n - idx[a]) % n;
        }
        out
    }

    /// True if any axis index of the flat spectral index sits on the Nyquist mode.
    pub fn on_nyquist(&self, flat: usize) -> bool {
        let idx = self.axis_indices(flat);
        (0..self.dim).any(|a| idx[a] == self.n_per_axis / 2)
    }

    /// Flat index of the lattice mode closest to `k` per axis, or an error if
    /// `k` is not on the lattice (within a small tolerance).
    pub fn lattice_index(&self, k: &[f64]) -> Result<usize> {
        if k.len() != self.dim {
            return Err(RelwaveError::domain(format!(
                "wavenumber has {} components, grid dim is {}",
                k.len(),
                self.dim
            )));
        }
        let dk = self.dk();
        let n = self.n_per_axis as isize;
        let mut out = 0usize;
        for &ka in k {
            let j = (ka / dk).round() as isize;
            if (ka - j as f64 * dk).abs() > 1e-9 * dk {
                return Err(RelwaveError::domain(format!(
                    "wavenumber {ka} is not on the grid lattice (dk = {dk})"
                )));
            }
            if j < -(n / 2) || j > n / 2 - 1 {
                return Err(RelwaveError::domain(format!(
                    "wavenumber {ka} exceeds the grid's resolved band"
                )));
            }
            let ja = j.rem_euclid(n) as usize;
            out = out * self.n_per_axis + ja;
        }
        Ok(out)
    }

    fn fft_all_axes(&self, values: &mut [Complex64], direction: FftDirection) {
        let n = self.n_per_axis;
        let total = self.n_total();
        let fft = match direction {
            FftDirection::Forward => &self.fft_forward,
            FftDirection::Inverse => &self.fft_inverse,
        };
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = n * stride;
            for outer in 0..total / block {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for t in 0..n {
                        line[t] = values[base + t * stride];
                    }
                    fft.process(&mut line);
                    for t in 0..n {
                        values[base + t * stride] = line[t];
                    }
                }
            }
        }
        // Unitary normalization in both directions.
        let scale = 1.0 / (total as f64).sqrt();
        for v in values.iter_mut() {
            *v *= scale;
        }
    }
}

/// Complex amplitude sampled on a grid, in either representation.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
    representation: Representation,
}

impl ComplexField {
    pub fn zeros(grid: Arc<SpectralGrid>, representation: Representation) -> Self {
        let n = grid.n_total();
        ComplexField {
            grid,
            values: vec![Complex64::default(); n],
            representation,
        }
    }

    pub fn from_values(
        grid: Arc<SpectralGrid>,
        values: Vec<Complex64>,
        representation: Representation,
    ) -> Result<Self> {
        if values.len() != grid.n_total() {
            return Err(RelwaveError::domain(format!(
                "expected {} samples, got {}",
                grid.n_total(),
                values.len()
            )));
        }
        Ok(ComplexField {
            grid,
            values,
            representation,
        })
    }

    /// Sample a function of position onto the grid.
    pub fn from_fn_physical(
        grid: Arc<SpectralGrid>,
        mut f: impl FnMut(&[f64]) -> Complex64,
    ) -> Self {
        let values = (0..grid.n_total())
            .map(|i| {
                let x = grid.x_vec(i);
                f(&x[..grid.dim()])
            })
            .collect();
        ComplexField {
            grid,
            values,
            representation: Representation::Physical,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// Unitary DFT between representations. Errors if the field is already in
    /// the target representation.
    pub fn transform(&self, target: Representation) -> Result<ComplexField> {
        if self.representation == target {
            return Err(RelwaveError::state(format!(
                "field is already in {target:?} representation"
            )));
        }
        let mut values = self.values.clone();
        let direction = match target {
            Representation::Spectral => FftDirection::Forward,
            Representation::Physical => FftDirection::Inverse,
        };
        self.grid.fft_all_axes(&mut values, direction);
        Ok(ComplexField {
            grid: self.grid.clone(),
            values,
            representation: target,
        })
    }

    /// A spectral copy of the field, transforming if necessary.
    pub fn to_spectral(&self) -> ComplexField {
        match self.representation {
            Representation::Spectral => self.clone(),
            Representation::Physical => self
                .transform(Representation::Spectral)
                .expect("representation checked"),
        }
    }

    /// A physical copy of the field, transforming if necessary.
    pub fn to_physical(&self) -> ComplexField {
        match self.representation {
            Representation::Physical => self.clone(),
            Representation::Spectral => self
                .transform(Representation::Physical)
                .expect("representation checked"),
        }
    }

    fn into_representation(self, target: Representation) -> ComplexField {
        if self.representation == target {
            self
        } else {
            self.transform(target).expect("representation checked")
        }
    }

    /// Apply a spectral multiplier `m(flat_index)`; returns a field in the
    /// same representation as the input.
    pub fn apply_symbol(&self, mut symbol: impl FnMut(usize) -> Complex64) -> ComplexField {
        let mut spectral = self.to_spectral();
        for (i, v) in spectral.values.iter_mut().enumerate() {
            *v *= symbol(i);
        }
        spectral.into_representation(self.representation)
    }

    /// `Delta^n`: per-mode multiplication by `(-k^2)^n`; `n = 0` is the identity.
    pub fn laplacian_power(&self, n: u32) -> ComplexField {
        if n == 0 {
            return self.clone();
        }
        let grid = self.grid.clone();
        self.apply_symbol(|i| Complex64::new((-grid.k_squared(i)).powi(n as i32), 0.0))
    }

    /// Spectral gradient: per-axis multiplication by `i k_a`, Nyquist zeroed.
    pub fn gradient(&self) -> Vec<ComplexField> {
        let grid = self.grid.clone();
        (0..grid.dim())
            .map(|axis| {
                let g = grid.clone();
                self.apply_symbol(move |i| {
                    let idx = g.axis_indices(i);
                    if idx[axis] == g.n_per_axis() / 2 {
                        Complex64::default()
                    } else {
                        Complex64::new(0.0, g.k_vec(i)[axis])
                    }
                })
            })
            .collect()
    }

    /// Spectral divergence of a vector field (one component per axis).
    pub fn divergence(components: &[ComplexField]) -> Result<ComplexField> {
        let grid = components
            .first()
            .ok_or_else(|| RelwaveError::domain("divergence of an empty vector field"))?
            .grid
            .clone();
        if components.len() != grid.dim() {
            return Err(RelwaveError::domain(format!(
                "expected {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        let repr = components[0].representation;
        let mut out = ComplexField::zeros(grid.clone(), Representation::Spectral);
        for (axis, comp) in components.iter().enumerate() {
            let g = grid.clone();
            let d = comp.apply_symbol(move |i| {
                let idx = g.axis_indices(i);
                if idx[axis] == g.n_per_axis() / 2 {
                    Complex64::default()
                } else {
                    Complex64::new(0.0, g.k_vec(i)[axis])
                }
            });
            let d = d.to_spectral();
            for (o, v) in out.values.iter_mut().zip(d.values.iter()) {
                *o += v;
            }
        }
        Ok(out.into_representation(repr))
    }

    /// `sum |psi|^2 dV` (physical) or the Parseval-equal spectral sum.
    pub fn norm_sq(&self) -> f64 {
        let w = self.grid.cell_volume();
        self.values.iter().map(|v| v.norm_sqr() * w).sum()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in self.values.iter_mut() {
            *v *= factor;
        }
    }

    /// Rescale to unit norm. Errors on a zero field.
    pub fn normalized(&self) -> Result<ComplexField> {
        let n = self.norm_sq();
        if n <= 0.0 {
            return Err(RelwaveError::domain("cannot normalize a zero field"));
        }
        let mut out = self.clone();
        out.scale(Complex64::new(1.0 / n.sqrt(), 0.0));
        Ok(out)
    }

    pub fn conj(&self) -> ComplexField {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = v.conj();
        }
        out
    }

    /// Pointwise map of two same-grid, same-representation fields.
    pub fn zip_map(
        &self,
        other: &ComplexField,
        mut f: impl FnMut(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexField> {
        if !Arc::ptr_eq(&self.grid, &other.grid) || self.representation != other.representation {
            return Err(RelwaveError::state(
                "zip_map requires fields on one grid in one representation",
            ));
        }
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ComplexField {
            grid: self.grid.clone(),
            values,
            representation: self.representation,
        })
    }

    /// Spatial reflection `x -> -x` of a physical-space field.
    pub fn reflected(&self) -> ComplexField {
        let phys = self.to_physical();
        let grid = phys.grid.clone();
        let mut values = phys.values.clone();
        for i in 0..values.len() {
            // Lattice reflection: index j maps to (n - j) mod n per axis.
            values[grid.negated_index(i)] = phys.values[i];
        }
        ComplexField {
            grid,
            values,
            representation: Representation::Physical,
        }
        .into_representation(self.representation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid1d(n: usize, box_length: f64) -> Arc<SpectralGrid> {
        SpectralGrid::new(1, n, box_length).unwrap()
    }

    fn max_abs_diff(a: &ComplexField, b: &ComplexField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn lattice_contains_zero_and_is_negation_closed() {
        let grid = grid1d(8, 4.0);
        let ks = grid.k_axis();
        assert!(ks.contains(&0.0));
        for (j, &k) in ks.iter().enumerate() {
            if j == 4 {
                continue; // Nyquist has no positive partner
            }
            assert!(ks.iter().any(|&k2| (k2 + k).abs() < 1e-12));
        }
        assert_relative_eq!(
            grid.cell_volume() * grid.n_total() as f64,
            grid.volume(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(SpectralGrid::new(0, 8, 1.0).is_err());
        assert!(SpectralGrid::new(1, 7, 1.0).is_err());
        assert!(SpectralGrid::new(1, 8, 0.0).is_err());
        assert!(SpectralGrid::new(4, 8, 1.0).is_err());
    }

    #[test]
    fn constant_field_transforms_to_zero_mode() {
        let grid = grid1d(16, 2.0);
        let f = ComplexField::from_fn_physical(grid.clone(), |_| Complex64::new(1.0, 0.0));
        let s = f.transform(Representation::Spectral).unwrap();
        assert_relative_eq!(s.values()[0].re, 4.0, max_relative = 1e-12); // sqrt(16)
        for v in &s.values()[1..] {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_hits_single_mode() {
        let grid = grid1d(16, 8.0);
        let k1 = grid.dk() * 3.0;
        let f = ComplexField::from_fn_physical(grid.clone(), |x| {
            Complex64::new(0.0, k1 * x[0]).exp()
        });
        let s = f.transform(Representation::Spectral).unwrap();
        let idx = grid.lattice_index(&[k1]).unwrap();
        for (i, v) in s.values().iter().enumerate() {
            if i == idx {
                assert!(v.norm() > 1.0);
            } else {
                assert!(v.norm() < 1e-10, "leakage at mode {i}: {v}");
            }
        }
    }

    #[test]
    fn transform_rejects_representation_mismatch() {
        let grid = grid1d(8, 1.0);
        let f = ComplexField::zeros(grid, Representation::Physical);
        assert!(f.transform(Representation::Physical).is_err());
    }

    #[test]
    fn laplacian_of_plane_wave() {
        let grid = grid1d(32, 8.0);
        let k1 = grid.dk() * 2.0;
        let f = ComplexField::from_fn_physical(grid, |x| Complex64::new(0.0, k1 * x[0]).exp());
        let lap = f.laplacian_power(1);
        let expected = f.zip_map(&f, |a, _| a * (-k1 * k1)).unwrap();
        assert!(max_abs_diff(&lap, &expected) < 1e-10);
    }

    #[test]
    fn laplacian_power_zero_is_identity() {
        let grid = grid1d(16, 3.0);
        let f = ComplexField::from_fn_physical(grid, |x| Complex64::new(x[0].sin(), x[0].cos()));
        assert_eq!(max_abs_diff(&f.laplacian_power(0), &f), 0.0);
    }

    #[test]
    fn laplacian_power_composes() {
        let grid = grid1d(64, 10.0);
        let f = gaussian(&grid);
        let twice = f.laplacian_power(1).laplacian_power(1);
        let once2 = f.laplacian_power(2);
        assert!(max_abs_diff(&twice, &once2) < 1e-12 * peak(&f.laplacian_power(2)));
    }

    fn gaussian(grid: &Arc<SpectralGrid>) -> ComplexField {
        let x0 = grid.box_length() / 2.0;
        ComplexField::from_fn_physical(grid.clone(), |x| {
            Complex64::new((-(x[0] - x0).powi(2)).exp(), 0.0)
        })
    }

    fn peak(f: &ComplexField) -> f64 {
        f.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let grid = grid1d(8, 1.0);
        let f = ComplexField::from_fn_physical(grid, |_| Complex64::new(2.5, -1.0));
        let g = f.gradient();
        assert_eq!(g.len(), 1);
        assert!(peak(&g[0]) < 1e-13);
    }

    #[test]
    fn gradient_matches_finite_difference_on_gaussian() {
        // Centered finite differences converge at O(h^2) to the spectral value.
        let grid = grid1d(256, 20.0);
        let f = gaussian(&grid);
        let g = f.gradient()[0].to_physical();
        let phys = f.to_physical();
        let n = grid.n_total();
        let h = grid.dx();
        let mut max_err: f64 = 0.0;
        for i in 0..n {
            let fd = (phys.values()[(i + 1) % n] - phys.values()[(i + n - 1) % n]) / (2.0 * h);
            max_err = max_err.max((fd - g.values()[i]).norm());
        }
        // h ~ 0.078, third-derivative scale O(1): expect ~1e-3 accuracy.
        assert!(max_err < 5e-3, "finite-difference mismatch {max_err}");
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        for dim in 1..=2 {
            let grid = SpectralGrid::new(dim, 16, 6.0).unwrap();
            let raw = ComplexField::from_fn_physical(grid.clone(), |x| {
                let r: f64 = x.iter().map(|v| (v - 3.0).powi(2)).sum();
                Complex64::new((-r).exp(), (0.5 * r).sin() * (-r).exp())
            });
            // The gradient zeroes Nyquist modes while the Laplacian keeps
            // them, so compare on a field with no Nyquist content.
            let g = grid.clone();
            let f = raw.apply_symbol(move |i| {
                let idx = g.axis_indices(i);
                let nyquist = (0..g.dim()).any(|a| idx[a] == g.n_per_axis() / 2);
                Complex64::new(if nyquist { 0.0 } else { 1.0 }, 0.0)
            });
            let div = ComplexField::divergence(&f.gradient()).unwrap();
            let lap = f.laplacian_power(1);
            assert!(max_abs_diff(&div, &lap) < 1e-12 * (1.0 + peak(&lap)));
        }
    }

    #[test]
    fn reflection_is_involutive_and_preserves_norm() {
        let grid = grid1d(32, 5.0);
        let f = ComplexField::from_fn_physical(grid, |x| {
            Complex64::new((x[0] * 1.3).sin(), (x[0] * 0.7).cos())
        });
        let r = f.reflected();
        assert_relative_eq!(r.norm_sq(), f.norm_sq(), max_relative = 1e-13);
        assert!(max_abs_diff(&r.reflected(), &f) < 1e-13);
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let grid = grid1d(64, 12.0);
            let values: Vec<Complex64> = (0..grid.n_total())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = ComplexField::from_values(grid, values, Representation::Physical).unwrap();
            let s = f.transform(Representation::Spectral).unwrap();
            let back = s.transform(Representation::Physical).unwrap();
            prop_assert!(max_abs_diff(&back, &f) < 1e-12);
            let rel = (s.norm_sq() - f.norm_sq()).abs() / f.norm_sq();
            prop_assert!(rel < 1e-12);
        }

        #[test]
        fn laplacian_power_additivity(a in 0u32..3, b in 0u32..3, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let grid = grid1d(32, 10.0);
            let values: Vec<Complex64> = (0..grid.n_total())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = ComplexField::from_values(grid, values, Representation::Physical).unwrap();
            let lhs = f.laplacian_power(a + b);
            let rhs = f.laplacian_power(a).laplacian_power(b);
            let scale = 1.0 + peak(&lhs);
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-10 * scale);
        }
    }
}
