/* C interface to the ldtail tail-probability library. */

#ifndef LDTAIL_H
#define LDTAIL_H

/* Generated by cbindgen from the ldtail-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call. `LD_STATUS_OK` is zero; anything
 * nonzero is a failure and leaves a message for
 * [`ld_last_error_message`].
 */
typedef enum LdStatus {
  LD_STATUS_OK = 0,
  /**
   * A model specification string could not be parsed.
   */
  LD_STATUS_PARSE = 1,
  /**
   * A parameter failed validation.
   */
  LD_STATUS_INVALID_PARAMETER = 2,
  /**
   * A tilt parameter fell outside the natural domain of the model.
   */
  LD_STATUS_BETA_OUT_OF_DOMAIN = 3,
  /**
   * A target mean fell outside the attainable range of tilted means.
   */
  LD_STATUS_MU_OUT_OF_RANGE = 4,
  /**
   * The target mean must lie strictly above the base mean.
   */
  LD_STATUS_BELOW_BASE_MEAN = 5,
  /**
   * The tilt solver exhausted its iteration budget.
   */
  LD_STATUS_NO_CONVERGENCE = 6,
  /**
   * The tilt at mu is too close to zero for the refinements.
   */
  LD_STATUS_DEGENERATE_TILT = 7,
  /**
   * n*mu does not sit on the lattice of the sum.
   */
  LD_STATUS_LATTICE_MISALIGNED = 8,
  /**
   * A lattice-only operation was applied to a non-lattice model.
   */
  LD_STATUS_NOT_LATTICE = 9,
  /**
   * The mean-shifted target dropped to or below the base mean.
   */
  LD_STATUS_SHIFTED_MEAN_BELOW_BASE = 10,
  /**
   * The requested computation is outside what the library implements.
   */
  LD_STATUS_UNSUPPORTED = 11,
  /**
   * An aggregate operation received no input.
   */
  LD_STATUS_EMPTY_INPUT = 12,
  /**
   * A fit was requested with too few usable data points.
   */
  LD_STATUS_INSUFFICIENT_DATA = 13,
  /**
   * Internal consistency check failed; indicates a library defect.
   */
  LD_STATUS_INTERNAL = 14,
  /**
   * File input/output failed.
   */
  LD_STATUS_IO = 15,
  /**
   * A required pointer argument was null.
   */
  LD_STATUS_NULL_ARGUMENT = 16,
  /**
   * A string argument was not valid UTF-8.
   */
  LD_STATUS_INVALID_UTF8 = 17,
  /**
   * The library panicked; state is unchanged but the result is lost.
   */
  LD_STATUS_PANIC = 18,
} LdStatus;

/**
 * Tail estimate selector, mirroring the library's three formulas.
 */
typedef enum LdMethod {
  LD_METHOD_SANOV = 0,
  LD_METHOD_BAHADUR_RAO = 1,
  LD_METHOD_REFINED_GAUSSIAN = 2,
} LdMethod;

/**
 * Opaque distribution model handle.
 */
typedef struct LdModel LdModel;

/**
 * Solution of the tilt equation E_beta[X] = mu.
 */
typedef struct LdTiltedSummary {
  double beta_hat;
  double divergence;
  double variance;
  double log_partition_at_tilt;
  double target_mean;
  /**
   * The tilt is so small that divergence-based refinements are
   * unreliable.
   */
  bool near_base_mean;
} LdTiltedSummary;

/**
 * One tail estimate. `c_mu` is meaningful only when `has_c_mu` is
 * true (the refined Gaussian method on a non-degenerate tilt).
 */
typedef struct LdTailEstimate {
  enum LdMethod method;
  /**
   * ln P{S_n >= n mu}, always <= 0.
   */
  double log_prob;
  double prob;
  double c_mu;
  bool has_c_mu;
} LdTailEstimate;

/**
 * Monte Carlo tail estimate with a 95% confidence interval.
 */
typedef struct LdMcEstimate {
  double point;
  double ci_low;
  double ci_high;
  uint64_t samples;
  uint64_t seed;
} LdMcEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a model specification (for example `bernoulli:p=0.5` or
 * `pmf:support=0,1;probs=0.5,0.5`) into a fresh handle.
 *
 * On success writes an owned handle to `*out`; release it with
 * [`ld_model_free`].
 *
 * # Safety
 *
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LdStatus ld_model_parse(const char *spec, struct LdModel **out);

/**
 * Releases a handle from [`ld_model_parse`]. Null is a no-op.
 *
 * # Safety
 *
 * `model` must be null or a handle not yet freed.
 */
void ld_model_free(struct LdModel *model);

/**
 * Solves the tilt equation E_beta[X] = mu.
 *
 * # Safety
 *
 * `model` must be a live handle and `out` a valid pointer.
 */
enum LdStatus ld_solve_tilt(const struct LdModel *model, double mu, struct LdTiltedSummary *out);

/**
 * Computes the mean-shift constant c_mu at the given target mean.
 *
 * # Safety
 *
 * `model` must be a live handle and `out` a valid pointer.
 */
enum LdStatus ld_c_mu(const struct LdModel *model, double mu, double *out);

/**
 * Computes one tail estimate for P{S_n >= n mu}.
 *
 * # Safety
 *
 * `model` must be a live handle, `method` a declared enum value, and
 * `out` a valid pointer.
 */
enum LdStatus ld_tail_estimate(const struct LdModel *model,
                               double mu,
                               uint64_t n,
                               enum LdMethod method,
                               struct LdTailEstimate *out);

/**
 * Computes the exact log tail probability ln P{S_n >= n mu} via the
 * model's closed-form oracle (or the convolution oracle for finite
 * pmfs).
 *
 * # Safety
 *
 * `model` must be a live handle and `out_log_prob` a valid pointer.
 */
enum LdStatus ld_exact_tail(const struct LdModel *model,
                            uint64_t n,
                            double mu,
                            double *out_log_prob);

/**
 * Estimates the tail probability by Monte Carlo with a Wilson 95%
 * interval. Identical (model, n, mu, samples, seed) inputs give
 * bit-identical results regardless of thread count.
 *
 * # Safety
 *
 * `model` must be a live handle and `out` a valid pointer.
 */
enum LdStatus ld_mc_tail(const struct LdModel *model,
                         uint64_t n,
                         double mu,
                         uint64_t samples,
                         uint64_t seed,
                         struct LdMcEstimate *out);

/**
 * Message of the most recent failure on this thread, or an empty
 * string. Valid until the next failing call on the same thread.
 */
const char *ld_last_error_message(void);

/**
 * Stable, NUL-terminated name of a status code.
 */
const char *ld_status_name(enum LdStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LDTAIL_H */
