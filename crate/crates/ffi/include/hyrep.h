#ifndef HYREP_H
#define HYREP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HyrepStatus {
  HYREP_STATUS_OK = 0,
  HYREP_STATUS_NULL_POINTER = 1,
  HYREP_STATUS_INVALID_ARGUMENT = 2,
  HYREP_STATUS_INSUFFICIENT_CUTOFF = 3,
  HYREP_STATUS_ZERO_NORM = 4,
  HYREP_STATUS_CONFIG = 5,
  HYREP_STATUS_NUMERIC = 6,
  HYREP_STATUS_VALIDATION_FAILED = 7,
  HYREP_STATUS_PANIC = 8,
} HyrepStatus;

/**
 * Opaque run configuration.
 */
typedef struct HyrepConfig HyrepConfig;

/**
 * Opaque pure state.
 */
typedef struct HyrepState HyrepState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next hyrep call on the same thread.
 */
const char *hyrep_last_error(void);

/**
 * `k_n` of the final-state recurrence.
 */
double hyrep_k_n(size_t n);

/**
 * Normalized single-mode cat `|α⟩ + |−α⟩` truncated at `cutoff`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum HyrepStatus hyrep_state_cat_single(double alpha, size_t cutoff, struct HyrepState **out);

/**
 * Normalized two-mode cat `e^{iθ}|α,α⟩ + e^{−iθ}|−α,−α⟩`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum HyrepStatus hyrep_state_cat_two(double alpha,
                                     double theta,
                                     size_t cutoff,
                                     struct HyrepState **out);

/**
 * Releases a state; null is ignored.
 *
 * # Safety
 * `state` must be null or a handle from this library not yet freed.
 */
void hyrep_state_free(struct HyrepState *state);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t hyrep_state_nmodes(const struct HyrepState *state);

/**
 * Squared norm of a state.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum HyrepStatus hyrep_state_norm_sqr(const struct HyrepState *state, double *out);

/**
 * `|⟨a|b⟩|²` of two normalized states of equal shape.
 *
 * # Safety
 * `a`, `b` must be live handles and `out` writable.
 */
enum HyrepStatus hyrep_state_fidelity(const struct HyrepState *a,
                                      const struct HyrepState *b,
                                      double *out);

/**
 * Exact acceptance probability of swapping two ideal two-mode cats.
 * `k` auxiliary cats are used; `delta_swap < 0` selects the default window.
 *
 * # Safety
 * `out` must be writable.
 */
enum HyrepStatus hyrep_swap_acceptance(double alpha, size_t k, double delta_swap, double *out);

/**
 * Default configuration.
 */
struct HyrepConfig *hyrep_config_default(void);

/**
 * Parses a flat TOML configuration.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum HyrepStatus hyrep_config_from_toml(const char *text, struct HyrepConfig **out);

/**
 * # Safety
 * `cfg` must be null or a handle from this library not yet freed.
 */
void hyrep_config_free(struct HyrepConfig *cfg);

/**
 * Overrides seed, workers and trials; a zero `trials` keeps the current value.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum HyrepStatus hyrep_config_set_run(struct HyrepConfig *cfg,
                                      uint64_t seed,
                                      size_t workers,
                                      size_t trials);

/**
 * Runs a CLI command (`fig2`, `fig3`, `breed`, `swap` or `validate`) and
 * returns its CSV or JSON text in `*out`, to be released with
 * [`hyrep_string_free`]. A failed `validate` still fills `*out` and returns
 * `ValidationFailed`.
 *
 * # Safety
 * `cfg` must be a live handle, `command` NUL-terminated and `out` writable.
 */
enum HyrepStatus hyrep_run(const struct HyrepConfig *cfg, const char *command, char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void hyrep_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hyrep_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYREP_H */
