#ifndef KGSLAB_H
#define KGSLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum KgslabStatus {
  // Success (for `kgslab_run_config`: all pass criteria held).
  KgslabStatus_Ok = 0,
  // The run completed but one or more pass criteria failed.
  KgslabStatus_FailedCriteria = 1,
  // A required pointer argument was null.
  KgslabStatus_NullArgument = -1,
  // A string argument was not valid UTF-8.
  KgslabStatus_InvalidUtf8 = -2,
  // An argument was out of range.
  KgslabStatus_InvalidArgument = -3,
  // The operation itself failed; see `kgslab_last_error_message`.
  KgslabStatus_RuntimeError = -4,
  // The library caught a panic; state may be inconsistent.
  KgslabStatus_Panic = -5,
} KgslabStatus;

// Opaque radial field handle.
typedef struct KgslabField KgslabField;

// Opaque radial grid handle.
typedef struct KgslabGrid KgslabGrid;

// Opaque trajectory handle.
typedef struct KgslabTrajectory KgslabTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string (do not free).
const char *kgslab_version(void);

// Last error message on this thread, or NULL. Free with
// [`kgslab_string_free`].
char *kgslab_last_error_message(void);

// Free a string returned by this library.
//
// # Safety
// `s` must come from a kgslab function and not have been freed already.
void kgslab_string_free(char *s);

// Build a uniform radial grid with `n_points` interior nodes on
// `(0, r_max)`.
//
// # Safety
// `out` must point to writable storage for one pointer.
enum KgslabStatus kgslab_grid_new(double r_max, size_t n_points, struct KgslabGrid **out);

// # Safety
// `grid` must come from [`kgslab_grid_new`] and not have been freed.
void kgslab_grid_free(struct KgslabGrid *grid);

// Number of interior nodes.
//
// # Safety
// `grid` must be a live handle.
size_t kgslab_grid_n_points(const struct KgslabGrid *grid);

// Largest resolvable frequency `n pi / r_max`.
//
// # Safety
// `grid` must be a live handle.
double kgslab_grid_xi_max(const struct KgslabGrid *grid);

// Real Gaussian profile `amplitude * exp(-r^2 / (2 width^2))`.
//
// # Safety
// `grid` must be live; `out` must point to writable pointer storage.
enum KgslabStatus kgslab_field_gaussian(const struct KgslabGrid *grid,
                                        double amplitude,
                                        double width,
                                        struct KgslabField **out);

// Seed-deterministic random data with frequency support on the dyadic
// annulus `2^k`, unit mass.
//
// # Safety
// `grid` must be live; `out` must point to writable pointer storage.
enum KgslabStatus kgslab_field_annular(const struct KgslabGrid *grid,
                                       int32_t k,
                                       uint64_t seed,
                                       struct KgslabField **out);

// # Safety
// `field` must come from a kgslab constructor and not have been freed.
void kgslab_field_free(struct KgslabField *field);

// `L^2` norm of a field.
//
// # Safety
// `field` must be live; `out` must point to writable f64 storage.
enum KgslabStatus kgslab_field_l2_norm(const struct KgslabField *field, double *out);

// Sobolev `H^s` norm of a field.
//
// # Safety
// `field` must be live; `out` must point to writable f64 storage.
enum KgslabStatus kgslab_field_sobolev_norm(const struct KgslabField *field, double s, double *out);

// Copy the complex samples of a field into caller buffers of length
// [`kgslab_grid_n_points`].
//
// # Safety
// `re` and `im` must each point to `len` writable doubles.
enum KgslabStatus kgslab_field_copy_values(const struct KgslabField *field,
                                           double *re,
                                           double *im,
                                           size_t len);

// Integrate the first-order coupled system from data `(u0, N0)` over
// `[0, t_span]` with step `dt`. `method` is 0 for the splitting scheme and
// 1 for the exponential midpoint rule.
//
// # Safety
// `u0` and `n0` must be live field handles on the same grid; `out` must
// point to writable pointer storage.
enum KgslabStatus kgslab_solve(const struct KgslabField *u0,
                               const struct KgslabField *n0,
                               double t_span,
                               double dt,
                               int method,
                               struct KgslabTrajectory **out);

// # Safety
// `traj` must come from [`kgslab_solve`] and not have been freed.
void kgslab_trajectory_free(struct KgslabTrajectory *traj);

// Number of stored snapshots.
//
// # Safety
// `traj` must be a live handle.
size_t kgslab_trajectory_len(const struct KgslabTrajectory *traj);

// Time of the stored snapshot at `index`.
//
// # Safety
// `traj` must be live; `out` must point to writable f64 storage.
enum KgslabStatus kgslab_trajectory_time(const struct KgslabTrajectory *traj,
                                         size_t index,
                                         double *out);

// Nucleon mass `||u(t)||_{L^2}` of the stored snapshot at `index`.
//
// # Safety
// `traj` must be live; `out` must point to writable f64 storage.
enum KgslabStatus kgslab_trajectory_mass(const struct KgslabTrajectory *traj,
                                         size_t index,
                                         double *out);

// Maximum drift of the nucleon mass over the run.
//
// # Safety
// `traj` must be live; `out` must point to writable f64 storage.
enum KgslabStatus kgslab_trajectory_mass_drift(const struct KgslabTrajectory *traj, double *out);

// Discrete equation residual of the stored trajectory.
//
// # Safety
// `traj` must be live; `out` must point to writable f64 storage.
enum KgslabStatus kgslab_trajectory_residual(const struct KgslabTrajectory *traj, double *out);

// 1 if the run tripped the instability or reflectivity guard, else 0.
//
// # Safety
// `traj` must be a live handle.
int kgslab_trajectory_aborted(const struct KgslabTrajectory *traj);

// Load a config file and run its experiment; artifacts go to the config's
// output directory, or to `out_dir` when non-NULL. Returns `Ok` when every
// pass criterion held, `FailedCriteria` when the run completed with
// failures, and a negative status on error.
//
// # Safety
// `config_path` must be a NUL-terminated string; `out_dir` may be NULL.
enum KgslabStatus kgslab_run_config(const char *config_path, const char *out_dir);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* KGSLAB_H */
