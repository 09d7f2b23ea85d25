#ifndef RYDGATE_H
#define RYDGATE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RydgateStatus {
  RYDGATE_STATUS_OK = 0,
  RYDGATE_STATUS_NULL_POINTER = 1,
  RYDGATE_STATUS_INVALID_ARGUMENT = 2,
  RYDGATE_STATUS_CONFIG = 3,
  RYDGATE_STATUS_NUMERICAL = 4,
  RYDGATE_STATUS_IO = 5,
  RYDGATE_STATUS_PANIC = 6,
} RydgateStatus;

/*
 Control input of [`rydgate_run_gate`].
 */
typedef enum RydgateControl {
  RYDGATE_CONTROL_ZERO = 0,
  RYDGATE_CONTROL_ONE = 1,
  /*
   (|0> + |1>)/√2
   */
  RYDGATE_CONTROL_SUPERPOSITION = 2,
} RydgateControl;

/*
 Result of one gate run.
 */
typedef struct RydgateOutcome RydgateOutcome;

/*
 Physical parameter set.
 */
typedef struct RydgateParams RydgateParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *rydgate_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *rydgate_version(void);

/*
 Rb87 preset with `n_atoms` ensemble atoms.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum RydgateStatus rydgate_params_preset(size_t n_atoms, struct RydgateParams **out);

/*
 Parameters from config-file text.

 # Safety
 `text` must be a NUL-terminated string and `out` writable.
 */
enum RydgateStatus rydgate_params_from_config(const char *text, struct RydgateParams **out);

/*
 # Safety
 `params` must come from this library and not be used afterwards.
 */
void rydgate_params_free(struct RydgateParams *params);

/*
 Uniform V_k and V_jk, both in units of ε.

 # Safety
 `params` must be a live handle.
 */
enum RydgateStatus rydgate_params_set_interactions(struct RydgateParams *params,
                                                   double v_control_over_eps,
                                                   double v_ensemble_over_eps);

/*
 Sets x_max through Ω_c, keeping the interactions fixed in units of ε.

 # Safety
 `params` must be a live handle.
 */
enum RydgateStatus rydgate_params_set_x_max(struct RydgateParams *params, double x_max);

/*
 ε in rad/s, or NaN for a null handle.

 # Safety
 `params` must be null or a live handle.
 */
double rydgate_params_epsilon(const struct RydgateParams *params);

/*
 x_max, or NaN for a null handle.

 # Safety
 `params` must be null or a live handle.
 */
double rydgate_params_x_max(const struct RydgateParams *params);

/*
 # Safety
 `params` must be null or a live handle.
 */
size_t rydgate_params_n_atoms(const struct RydgateParams *params);

/*
 Runs the gate on `control ⊗ ensemble`, where `ensemble` is a label
 string over A and B whose length must equal the atom count.

 # Safety
 `params` must be a live handle, `ensemble` NUL-terminated, `out` writable.
 */
enum RydgateStatus rydgate_run_gate(const struct RydgateParams *params,
                                    enum RydgateControl control,
                                    const char *ensemble,
                                    bool full_model,
                                    bool include_decay,
                                    struct RydgateOutcome **out);

/*
 # Safety
 `outcome` must come from this library and not be used afterwards.
 */
void rydgate_outcome_free(struct RydgateOutcome *outcome);

/*
 |<desired|final>|².

 # Safety
 `outcome` must be null (giving NaN) or a live handle.
 */
double rydgate_outcome_fidelity(const struct RydgateOutcome *outcome);

/*
 arg <desired|final>.

 # Safety
 `outcome` must be null (giving NaN) or a live handle.
 */
double rydgate_outcome_conditional_phase(const struct RydgateOutcome *outcome);

/*
 1 - <ψ(T)|ψ(T)>.

 # Safety
 `outcome` must be null (giving NaN) or a live handle.
 */
double rydgate_outcome_norm_loss(const struct RydgateOutcome *outcome);

/*
 Final population outside the computational subspace.

 # Safety
 `outcome` must be null (giving NaN) or a live handle.
 */
double rydgate_outcome_leakage(const struct RydgateOutcome *outcome);

/*
 Peak population with two or more ensemble atoms in |R>.

 # Safety
 `outcome` must be null (giving NaN) or a live handle.
 */
double rydgate_outcome_max_double_rydberg(const struct RydgateOutcome *outcome);

/*
 Peak population with the control and an ensemble atom both in Rydberg states.

 # Safety
 `outcome` must be null (giving NaN) or a live handle.
 */
double rydgate_outcome_max_control_ensemble_rydberg(const struct RydgateOutcome *outcome);

/*
 Phase of the transferred amplitude relative to β; NaN when β = 0.

 # Safety
 `outcome` must be null or a live handle.
 */
double rydgate_outcome_transfer_phase(const struct RydgateOutcome *outcome);

/*
 # Safety
 `outcome` must be null or a live handle.
 */
size_t rydgate_outcome_steps(const struct RydgateOutcome *outcome);

/*
 Closed-form blocking fidelity for `n_atoms` atoms and phase `phi`.

 # Safety
 `out` must be writable.
 */
enum RydgateStatus rydgate_analytic_blocking_fidelity(size_t n_atoms, double phi, double *out);

/*
 Ideal-gate interferometer. `phi` has `dim` entries, `ua` and `ub` are
 row-major `dim x dim`; real and imaginary parts are passed separately.
 Writes the overlap estimate to `out_re`/`out_im`.

 # Safety
 All array pointers must cover the stated lengths; outputs must be writable.
 */
enum RydgateStatus rydgate_interferometer_ideal(size_t n_atoms,
                                                size_t dim,
                                                const double *phi_re,
                                                const double *phi_im,
                                                const double *ua_re,
                                                const double *ua_im,
                                                const double *ub_re,
                                                const double *ub_im,
                                                double *out_re,
                                                double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RYDGATE_H */
