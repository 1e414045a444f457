#ifndef FATIGUE_FFI_H
#define FATIGUE_FFI_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FtDiscretization {
  FT_DISCRETIZATION_NONE = 0,
  FT_DISCRETIZATION_TEN = 1,
} FtDiscretization;

typedef enum FtLoadType {
  FT_LOAD_TYPE_BENDING = 0,
  FT_LOAD_TYPE_STRESS = 1,
  FT_LOAD_TYPE_STRAIN = 2,
} FtLoadType;

typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_DOMAIN = 2,
  FT_STATUS_CONFIG = 3,
  FT_STATUS_DEGENERATE_POSTERIOR = 4,
  FT_STATUS_NUMERICAL = 5,
  FT_STATUS_IO = 6,
  FT_STATUS_PARSE = 7,
  FT_STATUS_BUFFER_TOO_SMALL = 8,
  FT_STATUS_PANIC = 9,
} FtStatus;

typedef enum FtWidthScale {
  FT_WIDTH_SCALE_LOAD = 0,
  FT_WIDTH_SCALE_LOG10_EXPONENT = 1,
} FtWidthScale;

/**
 * Trained GP regression model.
 */
typedef struct FtGpModel FtGpModel;

/**
 * Prior over the mean fatigue strength with a fixed scatter.
 */
typedef struct FtPrior FtPrior;

/**
 * Ordered list of (load, outcome) experiments.
 */
typedef struct FtSeries FtSeries;

/**
 * Seeded ground-truth specimen generator.
 */
typedef struct FtSimulator FtSimulator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library, statically allocated.
 */
const char *ft_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into the library from the same thread.
 */
const char *ft_last_error_message(void);

/**
 * Failure probability of a specimen with median strength `mu_l` and scatter
 * `sigma_l` loaded at `load`.
 *
 * # Safety
 * `out` must be a valid pointer to a `double`.
 */
enum FtStatus ft_failure_probability(double mu_l, double sigma_l, double load, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum FtStatus ft_prior_new(double mean_log10,
                           double std_log10,
                           double sigma_l,
                           struct FtPrior **out);

/**
 * Prior centred on `mean_load` with a width in load units.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FtStatus ft_prior_from_width(double mean_load,
                                  double width,
                                  enum FtWidthScale scale,
                                  double sigma_l,
                                  struct FtPrior **out);

/**
 * Mean and standard deviation of the prior on `log10 mu`.
 *
 * # Safety
 * `prior` must come from `ft_prior_*`; the out pointers must be valid.
 */
enum FtStatus ft_prior_params(const struct FtPrior *prior, double *mean_log10, double *std_log10);

/**
 * # Safety
 * `prior` must be null or come from `ft_prior_*`, and not be used afterwards.
 */
void ft_prior_free(struct FtPrior *prior);

struct FtSeries *ft_series_new(void);

/**
 * Appends one experiment. `failed` is nonzero for a failure.
 *
 * # Safety
 * `series` must come from `ft_series_new`.
 */
enum FtStatus ft_series_push(struct FtSeries *series, double load, int32_t failed);

/**
 * Number of experiments, 0 for a null series.
 *
 * # Safety
 * `series` must be null or come from `ft_series_new`.
 */
size_t ft_series_len(const struct FtSeries *series);

/**
 * # Safety
 * `series` must be null or come from `ft_series_new`, and not be used afterwards.
 */
void ft_series_free(struct FtSeries *series);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum FtStatus ft_simulator_new(double mu_l,
                               double sigma_l,
                               uint64_t seed,
                               struct FtSimulator **out);

/**
 * Tests one fresh specimen at `load`; `failed` receives 1 or 0.
 *
 * # Safety
 * `sim` must come from `ft_simulator_new`; `failed` must be valid.
 */
enum FtStatus ft_simulator_step(struct FtSimulator *sim, double load, int32_t *failed);

/**
 * # Safety
 * `sim` must be null or come from `ft_simulator_new`, and not be used afterwards.
 */
void ft_simulator_free(struct FtSimulator *sim);

/**
 * Maximum a posteriori estimate of `(mu_l, sigma_l)`.
 *
 * # Safety
 * Handles must be valid; out pointers must be valid.
 */
enum FtStatus ft_map_estimate(const struct FtPrior *prior,
                              const struct FtSeries *series,
                              size_t restarts,
                              double *mu_hat,
                              double *sigma_hat);

/**
 * Posterior standard deviation of the mean strength on a grid of
 * `grid_points` points, both in `log10` units and in N.
 *
 * # Safety
 * Handles must be valid; out pointers must be valid.
 */
enum FtStatus ft_posterior_std(const struct FtPrior *prior,
                               const struct FtSeries *series,
                               size_t grid_points,
                               double *std_log10,
                               double *std_load);

/**
 * Next load recommended by the entropy acquisition.
 *
 * # Safety
 * Handles must be valid; `load` must be valid.
 */
enum FtStatus ft_acquire_entropy(const struct FtPrior *prior,
                                 const struct FtSeries *series,
                                 size_t grid_points,
                                 size_t restarts,
                                 uint64_t seed,
                                 double *load);

double ft_discretize_load(double load, enum FtDiscretization factor);

/**
 * Staircase levels `lo..=hi` around `l_ini` on the integer-rounded lattice.
 * `written` receives the number of levels; if `cap` is too small nothing is
 * copied and the required size is still reported.
 *
 * # Safety
 * `out` must point to `cap` doubles (may be null when `cap` is 0).
 */
enum FtStatus ft_staircase_levels(double l_ini,
                                  double d,
                                  int64_t lo,
                                  int64_t hi,
                                  double *out,
                                  size_t cap,
                                  size_t *written);

/**
 * Loads a GP model saved as JSON.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be valid.
 */
enum FtStatus ft_gp_load_json(const char *path, struct FtGpModel **out);

/**
 * Predictive normal on `log10 mu` for one material.
 *
 * # Safety
 * `model` must come from `ft_gp_load_json`; out pointers must be valid.
 */
enum FtStatus ft_gp_predict(const struct FtGpModel *model,
                            double v90,
                            double edge_hardness,
                            enum FtLoadType load_type,
                            double load_ratio_r,
                            double *mean_log10,
                            double *std_log10);

/**
 * # Safety
 * `model` must be null or come from `ft_gp_load_json`, and not be used afterwards.
 */
void ft_gp_free(struct FtGpModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FATIGUE_FFI_H */
