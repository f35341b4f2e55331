//! C ABI for the relwave core.
//!
//! The surface is deliberately small: opaque handles for physical parameters,
//! the spectral grid and a branch-decomposed state, plus queries for the
//! conserved functionals and field samples. Every function returns a
//! [`RelwaveStatus`] code; on failure a thread-local message is retrievable
//! via [`relwave_last_error`]. All entry points catch panics so that no
//! unwinding ever crosses the ABI boundary.
//!
//! Ownership rules are the usual ones for C handle APIs: every `*_new`
//! constructor transfers ownership of the returned handle to the caller, who
//! must release it with the matching `*_free`. Handles are not thread-safe;
//! guard them externally if shared.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use relwave::dispersion::omega_branch;
use relwave::wavefield::{gaussian_packet, plane_wave, split};
use relwave::{Branch, ModeAmplitudes, PhysicalParams, RelwaveError, SpectralGrid};

/// Status codes returned by every relwave FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelwaveStatus {
    /// The call succeeded.
    RelwaveOk = 0,
    /// A required pointer argument was null.
    RelwaveNullPointer = 1,
    /// An argument was outside its physical or numerical domain.
    RelwaveInvalidArgument = 2,
    /// A resource limit (for example an allocation cap) was exceeded.
    RelwaveResourceLimit = 3,
    /// An internal runtime failure (I/O, serialization, inconsistent state).
    RelwaveRuntimeError = 4,
    /// A panic was caught at the ABI boundary.
    RelwavePanic = 5,
}

/// Frequency branch selector, mirroring the two dispersion roots.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelwaveBranch {
    /// The low branch `omega_plus(k) = c (sqrt(mu^2 + k^2) - mu)`.
    RelwaveBranchPlus = 0,
    /// The high branch `omega_minus(k) = c (sqrt(mu^2 + k^2) + mu)`.
    RelwaveBranchMinus = 1,
}

impl From<RelwaveBranch> for Branch {
    fn from(b: RelwaveBranch) -> Branch {
        match b {
            RelwaveBranch::RelwaveBranchPlus => Branch::Plus,
            RelwaveBranch::RelwaveBranchMinus => Branch::Minus,
        }
    }
}

/// Opaque handle holding immutable physical constants (mass, c, hbar).
pub struct RelwaveParams {
    inner: PhysicalParams,
}

/// Opaque handle holding a periodic spectral grid.
pub struct RelwaveGrid {
    inner: Arc<SpectralGrid>,
}

/// Opaque handle holding a branch-decomposed field state. Time evolution is
/// exact (diagonal per mode), so `evolve` accumulates no integration error.
pub struct RelwaveState {
    inner: ModeAmplitudes,
    /// Current physical time; advanced by `relwave_state_evolve`.
    time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    // Interior NULs cannot come from our error strings, but never panic here.
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &RelwaveError) -> RelwaveStatus {
    match err {
        RelwaveError::Validation(_) | RelwaveError::Domain(_) | RelwaveError::State(_) => {
            RelwaveStatus::RelwaveInvalidArgument
        }
        RelwaveError::Resource(_) => RelwaveStatus::RelwaveResourceLimit,
        RelwaveError::Io(_) | RelwaveError::Json(_) => RelwaveStatus::RelwaveRuntimeError,
    }
}

/// Run `body` with panics converted into `RelwavePanic` and errors recorded
/// in the thread-local message slot.
fn guarded(body: impl FnOnce() -> Result<RelwaveStatus, RelwaveError>) -> RelwaveStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(err)) => {
            set_last_error(&err.to_string());
            status_of(&err)
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".to_string());
            set_last_error(&format!("panic: {message}"));
            RelwaveStatus::RelwavePanic
        }
    }
}

fn null_arg(name: &str) -> RelwaveStatus {
    set_last_error(&format!("argument `{name}` must not be null"));
    RelwaveStatus::RelwaveNullPointer
}

/// Checks a required pointer and returns early with `RelwaveNullPointer`
/// if it is null; otherwise yields a safe reference.
macro_rules! require {
    (ref $ptr:ident) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => return null_arg(stringify!($ptr)),
        }
    };
    (mut $ptr:ident) => {
        match unsafe { $ptr.as_mut() } {
            Some(r) => r,
            None => return null_arg(stringify!($ptr)),
        }
    };
}

/// Version of the underlying relwave crate as a NUL-terminated static string.
#[no_mangle]
pub extern "C" fn relwave_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message describing the most recent failure on the calling thread. The
/// pointer stays valid until the next failing relwave call on this thread.
/// Returns an empty string if no failure has occurred.
#[no_mangle]
pub extern "C" fn relwave_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Create physical parameters from mass, speed of light and hbar (all must
/// be strictly positive and finite). On success stores a new handle in
/// `out`; the caller owns it and must free it with `relwave_params_free`.
#[no_mangle]
pub extern "C" fn relwave_params_new(
    mass: c_double,
    speed_of_light: c_double,
    hbar: c_double,
    out: *mut *mut RelwaveParams,
) -> RelwaveStatus {
    let out = require!(mut out);
    guarded(|| {
        let inner = PhysicalParams::new(mass, speed_of_light, hbar)?;
        *out = Box::into_raw(Box::new(RelwaveParams { inner }));
        Ok(RelwaveStatus::RelwaveOk)
    })
}

/// Release a parameter handle. Null is a safe no-op.
#[no_mangle]
pub extern "C" fn relwave_params_free(params: *mut RelwaveParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Evaluate the chosen dispersion branch at wavenumber magnitude `k`.
#[no_mangle]
pub extern "C" fn relwave_omega(
    params: *const RelwaveParams,
    k: c_double,
    branch: RelwaveBranch,
    out: *mut c_double,
) -> RelwaveStatus {
    let params = require!(ref params);
    let out = require!(mut out);
    guarded(|| {
        if !(k.is_finite() && k >= 0.0) {
            return Err(RelwaveError::domain(format!(
                "wavenumber magnitude must be finite and non-negative (got {k})"
            )));
        }
        *out = omega_branch(k, branch.into(), &params.inner);
        Ok(RelwaveStatus::RelwaveOk)
    })
}

/// Create a periodic grid with `n_per_axis` points per axis on a box of the
/// given side length, in `dim` (1 to 3) dimensions. The caller owns the
/// returned handle and must free it with `relwave_grid_free`.
#[no_mangle]
pub extern "C" fn relwave_grid_new(
    dim: usize,
    n_per_axis: usize,
    box_length: c_double,
    out: *mut *mut RelwaveGrid,
) -> RelwaveStatus {
    let out = require!(mut out);
    guarded(|| {
        let inner = SpectralGrid::new(dim, n_per_axis, box_length)?;
        *out = Box::into_raw(Box::new(RelwaveGrid { inner }));
        Ok(RelwaveStatus::RelwaveOk)
    })
}

/// Release a grid handle. Null is a safe no-op.
#[no_mangle]
pub extern "C" fn relwave_grid_free(grid: *mut RelwaveGrid) {
    if !grid.is_null() {
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Total number of lattice points (`n_per_axis ^ dim`); this is the length
/// of every sampled field array.
#[no_mangle]
pub extern "C" fn relwave_grid_n_total(
    grid: *const RelwaveGrid,
    out: *mut usize,
) -> RelwaveStatus {
    let grid = require!(ref grid);
    let out = require!(mut out);
    *out = grid.inner.n_total();
    RelwaveStatus::RelwaveOk
}

fn new_state(amps: ModeAmplitudes, out: &mut *mut RelwaveState) -> RelwaveStatus {
    *out = Box::into_raw(Box::new(RelwaveState {
        inner: amps,
        time: 0.0,
    }));
    RelwaveStatus::RelwaveOk
}

/// Create a unit-norm single-branch plane-wave state on the lattice
/// wavenumber `k` (an array of `dim` components, each an exact multiple of
/// the grid spacing `2 pi / box`). The caller owns the returned handle.
#[no_mangle]
pub extern "C" fn relwave_state_plane_wave(
    grid: *const RelwaveGrid,
    params: *const RelwaveParams,
    k: *const c_double,
    dim: usize,
    branch: RelwaveBranch,
    out: *mut *mut RelwaveState,
) -> RelwaveStatus {
    let grid = require!(ref grid);
    let params = require!(ref params);
    let out = require!(mut out);
    if k.is_null() {
        return null_arg("k");
    }
    guarded(|| {
        check_dim(&grid.inner, dim)?;
        let k = unsafe { std::slice::from_raw_parts(k, dim) };
        let data = plane_wave(k, branch.into(), &grid.inner, &params.inner)?;
        let amps = split(&data, &params.inner)?;
        Ok(new_state(amps, out))
    })
}

/// Create a unit-norm single-branch Gaussian packet centred at `x0` with
/// carrier `k0` (arrays of `dim` components) and width `sigma`. The caller
/// owns the returned handle.
#[no_mangle]
pub extern "C" fn relwave_state_gaussian(
    grid: *const RelwaveGrid,
    params: *const RelwaveParams,
    x0: *const c_double,
    k0: *const c_double,
    dim: usize,
    sigma: c_double,
    branch: RelwaveBranch,
    out: *mut *mut RelwaveState,
) -> RelwaveStatus {
    let grid = require!(ref grid);
    let params = require!(ref params);
    let out = require!(mut out);
    if x0.is_null() {
        return null_arg("x0");
    }
    if k0.is_null() {
        return null_arg("k0");
    }
    guarded(|| {
        check_dim(&grid.inner, dim)?;
        let x0 = unsafe { std::slice::from_raw_parts(x0, dim) };
        let k0 = unsafe { std::slice::from_raw_parts(k0, dim) };
        let data = gaussian_packet(x0, k0, sigma, branch.into(), &grid.inner, &params.inner)?;
        let amps = split(&data, &params.inner)?;
        Ok(new_state(amps, out))
    })
}

fn check_dim(grid: &SpectralGrid, dim: usize) -> Result<(), RelwaveError> {
    if dim != grid.dim() {
        return Err(RelwaveError::domain(format!(
            "vector length {dim} does not match the grid dimension {}",
            grid.dim()
        )));
    }
    Ok(())
}

/// Release a state handle. Null is a safe no-op.
#[no_mangle]
pub extern "C" fn relwave_state_free(state: *mut RelwaveState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Advance the state by `dt` (which may be negative) using the exact
/// per-mode phase rotation. Repeated calls accumulate only round-off, never
/// integration error, so forward/backward pairs return to the start.
#[no_mangle]
pub extern "C" fn relwave_state_evolve(state: *mut RelwaveState, dt: c_double) -> RelwaveStatus {
    let state = require!(mut state);
    guarded(|| {
        if !dt.is_finite() {
            return Err(RelwaveError::domain(format!(
                "time step must be finite (got {dt})"
            )));
        }
        state.inner = relwave::propagators::evolve_exact(&state.inner, dt);
        state.time += dt;
        Ok(RelwaveStatus::RelwaveOk)
    })
}

/// Current physical time of the state (sum of all `evolve` steps).
#[no_mangle]
pub extern "C" fn relwave_state_time(
    state: *const RelwaveState,
    out: *mut c_double,
) -> RelwaveStatus {
    let state = require!(ref state);
    let out = require!(mut out);
    *out = state.time;
    RelwaveStatus::RelwaveOk
}

/// Squared norm carried by one branch, `sum_k |c_k|^2 dV`. The two branch
/// norms are separately conserved under exact evolution.
#[no_mangle]
pub extern "C" fn relwave_state_branch_norm_sq(
    state: *const RelwaveState,
    branch: RelwaveBranch,
    out: *mut c_double,
) -> RelwaveStatus {
    let state = require!(ref state);
    let out = require!(mut out);
    *out = state.inner.branch_norm_sq(branch.into());
    RelwaveStatus::RelwaveOk
}

/// Total energy from the diagonal k-space form `sum hbar omega |a_k|^2`.
#[no_mangle]
pub extern "C" fn relwave_state_energy(
    state: *const RelwaveState,
    out: *mut c_double,
) -> RelwaveStatus {
    let state = require!(ref state);
    let out = require!(mut out);
    *out = state.inner.total_energy();
    RelwaveStatus::RelwaveOk
}

/// Total momentum components from `sum hbar k |a_k|^2`, written into `out`
/// which must hold `dim` doubles (the grid dimension).
#[no_mangle]
pub extern "C" fn relwave_state_momentum(
    state: *const RelwaveState,
    out: *mut c_double,
    dim: usize,
) -> RelwaveStatus {
    let state = require!(ref state);
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        check_dim(state.inner.grid(), dim)?;
        let total = state.inner.total_momentum();
        let out = unsafe { std::slice::from_raw_parts_mut(out, dim) };
        out.copy_from_slice(&total);
        Ok(RelwaveStatus::RelwaveOk)
    })
}

/// Sample the physical-space field at the state's current time. `re` and
/// `im` receive the real and imaginary parts at all lattice points in
/// row-major order and must each hold `relwave_grid_n_total` doubles.
#[no_mangle]
pub extern "C" fn relwave_state_sample_psi(
    state: *const RelwaveState,
    re: *mut c_double,
    im: *mut c_double,
    len: usize,
) -> RelwaveStatus {
    let state = require!(ref state);
    if re.is_null() {
        return null_arg("re");
    }
    if im.is_null() {
        return null_arg("im");
    }
    guarded(|| {
        let n = state.inner.grid().n_total();
        if len != n {
            return Err(RelwaveError::domain(format!(
                "buffer length {len} does not match the grid size {n}"
            )));
        }
        // The phases accumulated by `evolve` already live in the amplitudes,
        // so the sample is always taken at local time zero.
        let field = state.inner.psi_at(0.0);
        let re = unsafe { std::slice::from_raw_parts_mut(re, len) };
        let im = unsafe { std::slice::from_raw_parts_mut(im, len) };
        for (m, value) in field.values().iter().enumerate() {
            re[m] = value.re;
            im[m] = value.im;
        }
        Ok(RelwaveStatus::RelwaveOk)
    })
}
