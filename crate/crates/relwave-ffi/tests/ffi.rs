//! Exercises the C ABI exactly as a foreign caller would: through raw
//! pointers, status codes and the thread-local error message.

use std::ffi::CStr;
use std::ptr;

use relwave_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(relwave_last_error()) }
        .to_string_lossy()
        .into_owned()
}

/// Builds the (params, grid) pair used by most tests: natural units on a
/// 1-d grid of 256 points over a box of length 20.
fn setup() -> (*mut RelwaveParams, *mut RelwaveGrid) {
    let mut params = ptr::null_mut();
    assert_eq!(
        relwave_params_new(1.0, 1.0, 1.0, &mut params),
        RelwaveStatus::RelwaveOk
    );
    let mut grid = ptr::null_mut();
    assert_eq!(
        relwave_grid_new(1, 256, 20.0, &mut grid),
        RelwaveStatus::RelwaveOk
    );
    (params, grid)
}

#[test]
fn version_is_a_nonempty_c_string() {
    let version = unsafe { CStr::from_ptr(relwave_version()) };
    assert!(!version.to_bytes().is_empty());
}

#[test]
fn params_reject_nonpositive_mass_with_message() {
    let mut params = ptr::null_mut();
    let status = relwave_params_new(-1.0, 1.0, 1.0, &mut params);
    assert_eq!(status, RelwaveStatus::RelwaveInvalidArgument);
    assert!(last_error().contains("mass"), "message: {}", last_error());
    assert!(params.is_null());
}

#[test]
fn null_out_pointer_is_reported_not_dereferenced() {
    let status = relwave_params_new(1.0, 1.0, 1.0, ptr::null_mut());
    assert_eq!(status, RelwaveStatus::RelwaveNullPointer);
    assert!(last_error().contains("out"));
}

#[test]
fn omega_matches_the_two_branch_dispersion() {
    let (params, grid) = setup();
    let mut wp = 0.0;
    let mut wm = 0.0;
    assert_eq!(
        relwave_omega(params, 3.0, RelwaveBranch::RelwaveBranchPlus, &mut wp),
        RelwaveStatus::RelwaveOk
    );
    assert_eq!(
        relwave_omega(params, 3.0, RelwaveBranch::RelwaveBranchMinus, &mut wm),
        RelwaveStatus::RelwaveOk
    );
    // omega_plus omega_minus = c^2 k^2 and omega_minus - omega_plus = 2 mu c.
    assert!((wp * wm - 9.0).abs() < 1e-12);
    assert!((wm - wp - 2.0).abs() < 1e-12);

    let mut bad = 0.0;
    assert_eq!(
        relwave_omega(params, f64::NAN, RelwaveBranch::RelwaveBranchPlus, &mut bad),
        RelwaveStatus::RelwaveInvalidArgument
    );

    relwave_grid_free(grid);
    relwave_params_free(params);
}

#[test]
fn evolve_round_trip_returns_to_the_initial_samples() {
    let (params, grid) = setup();
    let mut n_total = 0usize;
    assert_eq!(
        relwave_grid_n_total(grid, &mut n_total),
        RelwaveStatus::RelwaveOk
    );
    assert_eq!(n_total, 256);

    let mut state = ptr::null_mut();
    let status = relwave_state_gaussian(
        grid,
        params,
        [10.0].as_ptr(),
        [0.4].as_ptr(),
        1,
        1.5,
        RelwaveBranch::RelwaveBranchPlus,
        &mut state,
    );
    assert_eq!(status, RelwaveStatus::RelwaveOk, "{}", last_error());

    let mut re0 = vec![0.0; n_total];
    let mut im0 = vec![0.0; n_total];
    assert_eq!(
        relwave_state_sample_psi(state, re0.as_mut_ptr(), im0.as_mut_ptr(), n_total),
        RelwaveStatus::RelwaveOk
    );

    // 100 forward steps, one backward jump, back to the start.
    for _ in 0..100 {
        assert_eq!(relwave_state_evolve(state, 0.05), RelwaveStatus::RelwaveOk);
    }
    assert_eq!(relwave_state_evolve(state, -5.0), RelwaveStatus::RelwaveOk);
    let mut t = f64::NAN;
    assert_eq!(relwave_state_time(state, &mut t), RelwaveStatus::RelwaveOk);
    assert!(t.abs() < 1e-12);

    let mut re1 = vec![0.0; n_total];
    let mut im1 = vec![0.0; n_total];
    assert_eq!(
        relwave_state_sample_psi(state, re1.as_mut_ptr(), im1.as_mut_ptr(), n_total),
        RelwaveStatus::RelwaveOk
    );
    let max_dev = (0..n_total)
        .map(|m| ((re1[m] - re0[m]).powi(2) + (im1[m] - im0[m]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    assert!(max_dev < 1e-12, "round-trip deviation {max_dev}");

    relwave_state_free(state);
    relwave_grid_free(grid);
    relwave_params_free(params);
}

#[test]
fn conserved_functionals_are_invariant_under_evolution() {
    let (params, grid) = setup();
    let mut state = ptr::null_mut();
    assert_eq!(
        relwave_state_gaussian(
            grid,
            params,
            [10.0].as_ptr(),
            [0.3].as_ptr(),
            1,
            1.8,
            RelwaveBranch::RelwaveBranchPlus,
            &mut state,
        ),
        RelwaveStatus::RelwaveOk
    );

    let snapshot = |state: *const RelwaveState| {
        let mut norm = 0.0;
        let mut energy = 0.0;
        let mut momentum = [0.0];
        assert_eq!(
            relwave_state_branch_norm_sq(state, RelwaveBranch::RelwaveBranchPlus, &mut norm),
            RelwaveStatus::RelwaveOk
        );
        assert_eq!(
            relwave_state_energy(state, &mut energy),
            RelwaveStatus::RelwaveOk
        );
        assert_eq!(
            relwave_state_momentum(state, momentum.as_mut_ptr(), 1),
            RelwaveStatus::RelwaveOk
        );
        (norm, energy, momentum[0])
    };

    let (n0, e0, p0) = snapshot(state);
    assert!((n0 - 1.0).abs() < 1e-12, "unit norm, got {n0}");
    assert!(e0 > 0.0 && p0 > 0.0);
    assert_eq!(relwave_state_evolve(state, 7.3), RelwaveStatus::RelwaveOk);
    let (n1, e1, p1) = snapshot(state);
    assert!((n1 - n0).abs() < 1e-12);
    assert!((e1 - e0).abs() < 1e-12);
    assert!((p1 - p0).abs() < 1e-12);

    relwave_state_free(state);
    relwave_grid_free(grid);
    relwave_params_free(params);
}

#[test]
fn plane_wave_requires_a_lattice_wavenumber() {
    let (params, grid) = setup();
    let mut state = ptr::null_mut();
    // dk = 2 pi / 20; 0.123 is not a multiple of it.
    let status = relwave_state_plane_wave(
        grid,
        params,
        [0.123].as_ptr(),
        1,
        RelwaveBranch::RelwaveBranchPlus,
        &mut state,
    );
    assert_eq!(status, RelwaveStatus::RelwaveInvalidArgument);
    assert!(state.is_null());

    let dk = 2.0 * std::f64::consts::PI / 20.0;
    assert_eq!(
        relwave_state_plane_wave(
            grid,
            params,
            [3.0 * dk].as_ptr(),
            1,
            RelwaveBranch::RelwaveBranchMinus,
            &mut state,
        ),
        RelwaveStatus::RelwaveOk
    );
    // A minus-branch plane wave carries its whole norm on the minus branch.
    let mut minus = 0.0;
    assert_eq!(
        relwave_state_branch_norm_sq(state, RelwaveBranch::RelwaveBranchMinus, &mut minus),
        RelwaveStatus::RelwaveOk
    );
    assert!((minus - 1.0).abs() < 1e-12);

    relwave_state_free(state);
    relwave_grid_free(grid);
    relwave_params_free(params);
}

#[test]
fn buffer_length_mismatches_are_rejected() {
    let (params, grid) = setup();
    let mut state = ptr::null_mut();
    assert_eq!(
        relwave_state_gaussian(
            grid,
            params,
            [10.0].as_ptr(),
            [0.0].as_ptr(),
            1,
            1.5,
            RelwaveBranch::RelwaveBranchPlus,
            &mut state,
        ),
        RelwaveStatus::RelwaveOk
    );

    let mut buf = vec![0.0; 8];
    assert_eq!(
        relwave_state_sample_psi(state, buf.as_mut_ptr(), buf.as_mut_ptr(), 8),
        RelwaveStatus::RelwaveInvalidArgument
    );
    assert_eq!(
        relwave_state_momentum(state, buf.as_mut_ptr(), 3),
        RelwaveStatus::RelwaveInvalidArgument
    );

    relwave_state_free(state);
    relwave_grid_free(grid);
    relwave_params_free(params);
}

#[test]
fn frees_accept_null_handles() {
    relwave_params_free(ptr::null_mut());
    relwave_grid_free(ptr::null_mut());
    relwave_state_free(ptr::null_mut());
}
