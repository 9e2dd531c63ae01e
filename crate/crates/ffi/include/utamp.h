/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef UTAMP_H
#define UTAMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum UtampStatus {
  UTAMP_STATUS_OK = 0,
  UTAMP_STATUS_NULL_POINTER = 1,
  UTAMP_STATUS_INVALID_INPUT = 2,
  UTAMP_STATUS_DIMENSION_MISMATCH = 3,
  UTAMP_STATUS_INVALID_OPTIONS = 4,
  UTAMP_STATUS_FACTORIZATION_FAILED = 5,
  UTAMP_STATUS_UNSUPPORTED_PRIOR = 6,
  UTAMP_STATUS_EIGEN_NO_CONVERGENCE = 7,
  // A Rust panic was caught at the boundary.
  UTAMP_STATUS_INTERNAL = 8,
} UtampStatus;

typedef enum UtampRunStatus {
  UTAMP_RUN_STATUS_CONVERGED = 0,
  UTAMP_RUN_STATUS_MAX_ITERS = 1,
  UTAMP_RUN_STATUS_DIVERGED = 2,
} UtampRunStatus;

typedef enum UtampShapeCase {
  UTAMP_SHAPE_CASE_SQUARE = 0,
  UTAMP_SHAPE_CASE_TALL = 1,
  UTAMP_SHAPE_CASE_FAT = 2,
} UtampShapeCase;

typedef enum UtampAlgorithm {
  UTAMP_ALGORITHM_AMP_VECTOR = 0,
  UTAMP_ALGORITHM_AMP_SCALAR = 1,
  UTAMP_ALGORITHM_UT_AMP = 2,
} UtampAlgorithm;

// Observation model `y = A x + w`.
typedef struct UtampModel UtampModel;

// Signal prior.
typedef struct UtampPrior UtampPrior;

// Stopping rule; obtain defaults from `utamp_run_options_default`.
typedef struct UtampRunOptions {
  size_t max_iters;
  double x_tol;
  double divergence_norm;
} UtampRunOptions;

// Outcome of `utamp_solve`.
typedef struct UtampRunInfo {
  enum UtampRunStatus status;
  size_t iterations;
  double tau_x;
  // `‖y − A x‖₂` at the returned estimate.
  double residual;
} UtampRunInfo;

// Summary of `utamp_certify`. `tau_q` is infinite for an all-zero matrix;
// `numeric_discrepancy` is NaN unless the dense check was requested.
typedef struct UtampCertificate {
  enum UtampShapeCase case_;
  double tau_x;
  double tau_q;
  double alpha;
  double spectral_radius;
  double numeric_discrepancy;
  bool converges;
} UtampCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *utamp_version(void);

// Message for the most recent failed call on this thread, or null after a
// successful call. Valid until the next call on the same thread.
const char *utamp_last_error(void);

// Creates a model from a dense row-major `rows x cols` matrix and a length
// `rows` observation.
//
// # Safety
// `a_re` must hold `rows * cols` values, `y_re` `rows` values; the imaginary
// arrays are null or the same length. `out` must be writable.
enum UtampStatus utamp_model_new(size_t rows,
                                 size_t cols,
                                 const double *a_re,
                                 const double *a_im,
                                 const double *y_re,
                                 const double *y_im,
                                 double sigma2,
                                 struct UtampModel **out);

// Creates a model with the `n x n` circulant matrix whose first column is
// `c`; UT-AMP then runs on the FFT path.
//
// # Safety
// `c_re` and `y_re` must hold `n` values; the imaginary arrays are null or
// the same length. `out` must be writable.
enum UtampStatus utamp_model_new_circulant(size_t n,
                                           const double *c_re,
                                           const double *c_im,
                                           const double *y_re,
                                           const double *y_im,
                                           double sigma2,
                                           struct UtampModel **out);

// # Safety
// `model` must be null or come from a `utamp_model_new*` call and not have
// been freed.
void utamp_model_free(struct UtampModel *model);

// Writes the matrix dimensions.
//
// # Safety
// `model` must be a live handle; `rows` and `cols` must be writable.
enum UtampStatus utamp_model_shape(const struct UtampModel *model, size_t *rows, size_t *cols);

// Gaussian prior with the same mean and variance for each of `n` elements.
//
// # Safety
// `out` must be writable.
enum UtampStatus utamp_prior_gaussian_iid(size_t n,
                                          double mean_re,
                                          double mean_im,
                                          double var,
                                          struct UtampPrior **out);

// Gaussian prior with per-element means `x0` and variances `tau0`.
//
// # Safety
// `x0_re` and `tau0` must hold `n` values; `x0_im` is null or holds `n`
// values. `out` must be writable.
enum UtampStatus utamp_prior_gaussian(size_t n,
                                      const double *x0_re,
                                      const double *x0_im,
                                      const double *tau0,
                                      struct UtampPrior **out);

// Bernoulli-Gaussian prior `(1 − rho) δ0 + rho N(mu, v)`.
//
// # Safety
// `out` must be writable.
enum UtampStatus utamp_prior_bernoulli_gaussian(double rho,
                                                double mu_re,
                                                double mu_im,
                                                double v,
                                                struct UtampPrior **out);

// # Safety
// `prior` must be null or come from a `utamp_prior_*` call and not have been
// freed.
void utamp_prior_free(struct UtampPrior *prior);

struct UtampRunOptions utamp_run_options_default(void);

// Runs `algorithm` (a `UtampAlgorithm` value) from the prior-statistics
// start and writes the final estimate (length `cols`) and a summary.
//
// # Safety
// `model` and `prior` must be live handles; `x_re` must hold `cols` values,
// `x_im` is null or holds `cols` values; `options` is null (defaults) or
// readable; `info` is null or writable.
enum UtampStatus utamp_solve(const struct UtampModel *model,
                             const struct UtampPrior *prior,
                             uint32_t algorithm,
                             const struct UtampRunOptions *options,
                             double *x_re,
                             double *x_im,
                             struct UtampRunInfo *info);

// Certifies UT-AMP convergence on `model` under a Gaussian `prior`. With
// `check_numeric` the dense iteration matrix is also built and compared.
//
// # Safety
// `model` and `prior` must be live handles; `out` must be writable.
enum UtampStatus utamp_certify(const struct UtampModel *model,
                               const struct UtampPrior *prior,
                               bool check_numeric,
                               struct UtampCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UTAMP_H */
