#ifndef LATENT_GOLAZO_H
#define LATENT_GOLAZO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible function.
typedef enum LgStatus {
  LG_STATUS_OK = 0,
  LG_STATUS_NULL_POINTER = 1,
  // Invalid parameters, bounds, penalty or argument values.
  LG_STATUS_INVALID_ARGUMENT = 2,
  // Input data rejected (shape, finiteness, definiteness, too few exceedances).
  LG_STATUS_INVALID_DATA = 3,
  // Eigendecomposition failure or non-finite iterates.
  LG_STATUS_DIVERGENCE = 4,
  // The solver hit its iteration limit; the result handle is still produced.
  LG_STATUS_NOT_CONVERGED = 5,
  // Output buffer shorter than required.
  LG_STATUS_BUFFER_TOO_SMALL = 6,
  LG_STATUS_PANIC = 7,
} LgStatus;

// Opaque Golazo bounds `(L, U)`.
typedef struct LgBounds LgBounds;

// Opaque solver result.
typedef struct LgFit LgFit;

// Solver settings; obtain defaults from [`lg_admm_params_default`].
typedef struct LgAdmmParams {
  double augmentation;
  double dual_step;
  double inflation;
  double proximal_weight;
  double trace_penalty;
  double tol_rel_change;
  double tol_infeasibility;
  size_t max_iter;
} LgAdmmParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *lg_version(void);

// Message of the last failure on this thread, or NULL. Valid until the next call on this thread.
const char *lg_last_error_message(void);

struct LgAdmmParams lg_admm_params_default(void);

// Bounds from row-major `dim × dim` lower and upper matrices (entries may be ±infinity).
//
// # Safety
// `lower` and `upper` must each point to `dim*dim` doubles; `out` must be writable.
enum LgStatus lg_bounds_new(const double *lower,
                            const double *upper,
                            size_t dim,
                            struct LgBounds **out);

// Bounds compiled from a preset tag such as `"lasso"`, `"mtp2"` or `"sparse_positive"`.
//
// # Safety
// `tag` must be a NUL-terminated string; `out` must be writable.
enum LgStatus lg_bounds_preset(const char *tag,
                               size_t dim,
                               double lambda,
                               double gamma,
                               struct LgBounds **out);

// Dimension of the bounds, or 0 for NULL.
//
// # Safety
// `bounds` must be NULL or a live handle.
size_t lg_bounds_dim(const struct LgBounds *bounds);

// Copies `L` and `U` (row-major) into buffers of `len ≥ dim*dim` doubles each.
//
// # Safety
// `bounds` must be a live handle; `lower_out` and `upper_out` must hold `len` doubles.
enum LgStatus lg_bounds_copy(const struct LgBounds *bounds,
                             double *lower_out,
                             double *upper_out,
                             size_t len);

// # Safety
// `bounds` must be NULL or a handle not yet freed.
void lg_bounds_free(struct LgBounds *bounds);

// Latent Gaussian fit of a `dim × dim` sample covariance. `params` may be NULL for defaults.
//
// On `Ok` or `NotConverged`, `*out` receives a handle to free with [`lg_fit_free`].
//
// # Safety
// `cov` must hold `dim*dim` doubles; `bounds` must be live; `out` must be writable.
enum LgStatus lg_solve_gaussian(const double *cov,
                                size_t dim,
                                const struct LgBounds *bounds,
                                const struct LgAdmmParams *params,
                                struct LgFit **out);

// Latent Laplacian fit of a `dim × dim` input (`−Γ/2` for Hüsler–Reiss, `S` for the
// Laplacian-constrained Gaussian). `params` may be NULL for defaults.
//
// # Safety
// As for [`lg_solve_gaussian`].
enum LgStatus lg_solve_laplacian(const double *input,
                                 size_t dim,
                                 const struct LgBounds *bounds,
                                 const struct LgAdmmParams *params,
                                 struct LgFit **out);

// # Safety
// `fit` must be NULL or a live handle.
size_t lg_fit_dim(const struct LgFit *fit);

// # Safety
// `fit` must be NULL or a live handle.
size_t lg_fit_iterations(const struct LgFit *fit);

// 1 when the stopping tolerances were met, 0 otherwise (including NULL).
//
// # Safety
// `fit` must be NULL or a live handle.
int32_t lg_fit_converged(const struct LgFit *fit);

// # Safety
// `fit` must be NULL or a live handle.
double lg_fit_final_rel_chg(const struct LgFit *fit);

// # Safety
// `fit` must be NULL or a live handle.
double lg_fit_final_ier(const struct LgFit *fit);

// Copies the sparse component `Â` (row-major) into `out`.
//
// # Safety
// `fit` must be live; `out` must hold `len` doubles.
enum LgStatus lg_fit_sparse(const struct LgFit *fit, double *out, size_t len);

// Copies the low-rank component `B̂` (row-major) into `out`.
//
// # Safety
// `fit` must be live; `out` must hold `len` doubles.
enum LgStatus lg_fit_low_rank(const struct LgFit *fit, double *out, size_t len);

// Copies the fitted precision (`M̂` or `Θ̂`, row-major) into `out`.
//
// # Safety
// `fit` must be live; `out` must hold `len` doubles.
enum LgStatus lg_fit_precision(const struct LgFit *fit, double *out, size_t len);

// # Safety
// `fit` must be NULL or a handle not yet freed.
void lg_fit_free(struct LgFit *fit);

// Rank-based empirical variogram of `n × d` row-major samples with `k` exceedances per anchor.
//
// # Safety
// `x` must hold `n*d` doubles; `out` must hold `d*d` doubles.
enum LgStatus lg_empirical_variogram(const double *x, size_t n, size_t d, size_t k, double *out);

// Variogram of Pareto-scale samples using rows whose anchor coordinate exceeds `threshold`.
//
// # Safety
// `x` must hold `n*d` doubles; `out` must hold `d*d` doubles.
enum LgStatus lg_pareto_variogram(const double *x,
                                  size_t n,
                                  size_t d,
                                  double threshold,
                                  double *out);

// Laplacian precision `Θ` of a `d × d` variogram.
//
// # Safety
// `gamma` and `out` must each hold `d*d` doubles.
enum LgStatus lg_gamma_to_theta(const double *gamma, size_t d, double *out);

// Variogram `Γ` of a `d × d` Laplacian precision.
//
// # Safety
// `theta` and `out` must each hold `d*d` doubles.
enum LgStatus lg_theta_to_gamma(const double *theta, size_t d, double *out);

// `n` multivariate Pareto draws (exponential margins, row-major `n × d`) from a
// Hüsler–Reiss model with variogram `gamma`.
//
// # Safety
// `gamma` must hold `d*d` doubles; `out` must hold `n*d` doubles.
enum LgStatus lg_sample_hr_pareto(const double *gamma,
                                  size_t d,
                                  size_t n,
                                  uint64_t seed,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LATENT_GOLAZO_H */
