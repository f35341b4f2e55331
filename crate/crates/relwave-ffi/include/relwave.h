#ifndef RELWAVE_H
#define RELWAVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Frequency branch selector, mirroring the two dispersion roots.
 */
typedef enum RelwaveBranch {
  /**
   * The low branch `omega_plus(k) = c (sqrt(mu^2 + k^2) - mu)`.
   */
  RelwaveBranchPlus = 0,
  /**
   * The high branch `omega_minus(k) = c (sqrt(mu^2 + k^2) + mu)`.
   */
  RelwaveBranchMinus = 1,
} RelwaveBranch;

/**
 * Status codes returned by every relwave FFI call.
 */
typedef enum RelwaveStatus {
  /**
   * The call succeeded.
   */
  RelwaveOk = 0,
  /**
   * A required pointer argument was null.
   */
  RelwaveNullPointer = 1,
  /**
   * An argument was outside its physical or numerical domain.
   */
  RelwaveInvalidArgument = 2,
  /**
   * A resource limit (for example an allocation cap) was exceeded.
   */
  RelwaveResourceLimit = 3,
  /**
   * An internal runtime failure (I/O, serialization, inconsistent state).
   */
  RelwaveRuntimeError = 4,
  /**
   * A panic was caught at the ABI boundary.
   */
  RelwavePanic = 5,
} RelwaveStatus;

/**
 * Opaque handle holding a periodic spectral grid.
 */
typedef struct RelwaveGrid RelwaveGrid;

/**
 * Opaque handle holding immutable physical constants (mass, c, hbar).
 */
typedef struct RelwaveParams RelwaveParams;

/**
 * Opaque handle holding a branch-decomposed field state. Time evolution is
 * exact (diagonal per mode), so `evolve` accumulates no integration error.
 */
typedef struct RelwaveState RelwaveState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying relwave crate as a NUL-terminated static string.
 */
const char *relwave_version(void);

/**
 * Message describing the most recent failure on the calling thread. The
 * pointer stays valid until the next failing relwave call on this thread.
 * Returns an empty string if no failure has occurred.
 */
const char *relwave_last_error(void);

/**
 * Create physical parameters from mass, speed of light and hbar (all must
 * be strictly positive and finite). On success stores a new handle in
 * `out`; the caller owns it and must free it with `relwave_params_free`.
 */
enum RelwaveStatus relwave_params_new(double mass,
                                      double speed_of_light,
                                      double hbar,
                                      struct RelwaveParams **out);

/**
 * Release a parameter handle. Null is a safe no-op.
 */
void relwave_params_free(struct RelwaveParams *params);

/**
 * Evaluate the chosen dispersion branch at wavenumber magnitude `k`.
 */
enum RelwaveStatus relwave_omega(const struct RelwaveParams *params,
                                 double k,
                                 enum RelwaveBranch branch,
                                 double *out);

/**
 * Create a periodic grid with `n_per_axis` points per axis on a box of the
 * given side length, in `dim` (1 to 3) dimensions. The caller owns the
 * returned handle and must free it with `relwave_grid_free`.
 */
enum RelwaveStatus relwave_grid_new(uintptr_t dim,
                                    uintptr_t n_per_axis,
                                    double box_length,
                                    struct RelwaveGrid **out);

/**
 * Release a grid handle. Null is a safe no-op.
 */
void relwave_grid_free(struct RelwaveGrid *grid);

/**
 * Total number of lattice points (`n_per_axis ^ dim`); this is the length
 * of every sampled field array.
 */
enum RelwaveStatus relwave_grid_n_total(const struct RelwaveGrid *grid, uintptr_t *out);

/**
 * Create a unit-norm single-branch plane-wave state on the lattice
 * wavenumber `k` (an array of `dim` components, each an exact multiple of
 * the grid spacing `2 pi / box`). The caller owns the returned handle.
 */
enum RelwaveStatus relwave_state_plane_wave(const struct RelwaveGrid *grid,
                                            const struct RelwaveParams *params,
                                            const double *k,
                                            uintptr_t dim,
                                            enum RelwaveBranch branch,
                                            struct RelwaveState **out);

/**
 * Create a unit-norm single-branch Gaussian packet centred at `x0` with
 * carrier `k0` (arrays of `dim` components) and width `sigma`. The caller
 * owns the returned handle.
 */
enum RelwaveStatus relwave_state_gaussian(const struct RelwaveGrid *grid,
                                          const struct RelwaveParams *params,
                                          const double *x0,
                                          const double *k0,
                                          uintptr_t dim,
                                          double sigma,
                                          enum RelwaveBranch branch,
                                          struct RelwaveState **out);

/**
 * Release a state handle. Null is a safe no-op.
 */
void relwave_state_free(struct RelwaveState *state);

/**
 * Advance the state by `dt` (which may be negative) using the exact
 * per-mode phase rotation. Repeated calls accumulate only round-off, never
 * integration error, so forward/backward pairs return to the start.
 */
enum RelwaveStatus relwave_state_evolve(struct RelwaveState *state, double dt);

/**
 * Current physical time of the state (sum of all `evolve` steps).
 */
enum RelwaveStatus relwave_state_time(const struct RelwaveState *state, double *out);

/**
 * Squared norm carried by one branch, `sum_k |c_k|^2 dV`. The two branch
 * norms are separately conserved under exact evolution.
 */
enum RelwaveStatus relwave_state_branch_norm_sq(const struct RelwaveState *state,
                                                enum RelwaveBranch branch,
                                                double *out);

/**
 * Total energy from the diagonal k-space form `sum hbar omega |a_k|^2`.
 */
enum RelwaveStatus relwave_state_energy(const struct RelwaveState *state, double *out);

/**
 * Total momentum components from `sum hbar k |a_k|^2`, written into `out`
 * which must hold `dim` doubles (the grid dimension).
 */
enum RelwaveStatus relwave_state_momentum(const struct RelwaveState *state,
                                          double *out,
                                          uintptr_t dim);

/**
 * Sample the physical-space field at the state's current time. `re` and
 * `im` receive the real and imaginary parts at all lattice points in
 * row-major order and must each hold `relwave_grid_n_total` doubles.
 */
enum RelwaveStatus relwave_state_sample_psi(const struct RelwaveState *state,
                                            double *re,
                                            double *im,
                                            uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELWAVE_H */
