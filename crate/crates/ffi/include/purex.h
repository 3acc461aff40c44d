#ifndef PUREX_H
#define PUREX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PurexStatus {
  PUREX_STATUS_OK = 0,
  PUREX_STATUS_NULL_POINTER = 1,
  PUREX_STATUS_INVALID_ARGUMENT = 2,
  PUREX_STATUS_INVALID_UTF8 = 3,
  PUREX_STATUS_CONTRACT_VIOLATION = 4,
  PUREX_STATUS_OUT_OF_RANGE = 5,
  PUREX_STATUS_RUNTIME = 6,
  PUREX_STATUS_PANIC = 7,
} PurexStatus;

typedef enum PurexNoise {
  PUREX_NOISE_GAUSSIAN = 0,
  PUREX_NOISE_BERNOULLI = 1,
} PurexNoise;

typedef struct PurexEnv PurexEnv;

typedef struct PurexInstance PurexInstance;

typedef struct PurexPolicy PurexPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `purex_*` call on this thread.
 */
const char *purex_last_error_message(void);

/**
 * # Safety
 * `means` must point to `n` doubles; `out` must be writable.
 */
enum PurexStatus purex_instance_new(const double *means,
                                    size_t n,
                                    enum PurexNoise noise,
                                    double sigma,
                                    struct PurexInstance **out_instance);

/**
 * # Safety
 * `instance` must come from `purex_instance_new` and not be freed twice.
 */
void purex_instance_free(struct PurexInstance *instance);

/**
 * # Safety
 * Pointers must be valid.
 */
enum PurexStatus purex_instance_n(const struct PurexInstance *instance, size_t *out_n);

/**
 * Gap `max mean - mean[arm]`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum PurexStatus purex_instance_gap(const struct PurexInstance *instance,
                                    size_t arm,
                                    double *out_gap);

/**
 * Environment over a copy of `instance`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum PurexStatus purex_env_new(const struct PurexInstance *instance,
                               uint64_t seed,
                               struct PurexEnv **out_env);

/**
 * # Safety
 * `env` must come from `purex_env_new` and not be freed twice.
 */
void purex_env_free(struct PurexEnv *env);

/**
 * # Safety
 * Pointers must be valid.
 */
enum PurexStatus purex_env_pull(struct PurexEnv *env, size_t arm, double *out_reward);

/**
 * # Safety
 * Pointers must be valid.
 */
enum PurexStatus purex_env_total_pulls(const struct PurexEnv *env, uint64_t *out_total);

/**
 * Builds a policy from a spec such as `"bsh"` or `"sh:T=1000,opt=2"`.
 * `horizon` is the budget for `sh` without `T`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out_policy` must be writable.
 */
enum PurexStatus purex_policy_new(const char *spec,
                                  size_t n,
                                  uint64_t horizon,
                                  uint64_t seed,
                                  struct PurexPolicy **out_policy);

/**
 * # Safety
 * `policy` must come from `purex_policy_new` and not be freed twice.
 */
void purex_policy_free(struct PurexPolicy *policy);

/**
 * # Safety
 * Pointers must be valid.
 */
enum PurexStatus purex_policy_next_arm(struct PurexPolicy *policy, size_t *out_arm);

/**
 * # Safety
 * `policy` must be valid.
 */
enum PurexStatus purex_policy_observe(struct PurexPolicy *policy, double reward);

/**
 * Current recommendation. `out_mean` is `-INFINITY` until the policy has an
 * estimate.
 *
 * # Safety
 * Pointers must be valid.
 */
enum PurexStatus purex_policy_recommend(const struct PurexPolicy *policy,
                                        size_t *out_arm,
                                        double *out_mean);

/**
 * # Safety
 * `out_value` must be writable.
 */
enum PurexStatus purex_simple_regret_bound(size_t n, uint64_t budget, double *out_value);

/**
 * # Safety
 * Output pointers must be writable.
 */
enum PurexStatus purex_err_bound_sh_m(size_t n,
                                      uint64_t budget,
                                      double eps,
                                      size_t m,
                                      double const_c,
                                      double *out_value,
                                      double *out_exponent);

/**
 * Brackets opened by step `t` and the closed-form sandwich around it.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum PurexStatus purex_brackets_open(uint64_t t,
                                     uint32_t *out_opened,
                                     double *out_lower,
                                     double *out_upper);

/**
 * Runs an experiment described by a config JSON document and returns the
 * summary JSON. Relative instance paths resolve against the current
 * directory. Release the result with `purex_string_free`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out_json` must be writable.
 */
enum PurexStatus purex_simulate(const char *config_json, char **out_json);

/**
 * # Safety
 * `s` must come from a `purex_*` function that documents this release.
 */
void purex_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PUREX_H */
