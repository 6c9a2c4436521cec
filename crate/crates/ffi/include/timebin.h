#ifndef TIMEBIN_H
#define TIMEBIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum TbStatus {
  TB_STATUS_OK = 0,
  TB_STATUS_NULL_POINTER = 1,
  TB_STATUS_INVALID_ARGUMENT = 2,
  TB_STATUS_LENGTH_MISMATCH = 3,
  TB_STATUS_ZERO_NORM = 4,
  TB_STATUS_NO_SIGNAL = 5,
  TB_STATUS_FIT_FAILED = 6,
  TB_STATUS_VISIBILITY_TOO_HIGH = 7,
  TB_STATUS_INDEX_OUT_OF_RANGE = 8,
  TB_STATUS_PANIC = 99,
} TbStatus;

/**
 * Opaque pulse train.
 */
typedef struct TbPulseTrain TbPulseTrain;

/**
 * Opaque two-photon amplitude map.
 */
typedef struct TbState TbState;

typedef struct TbDimensionBound {
  double bound;
  uint64_t claimed_dimension;
  double lower;
  /**
   * Meaningful only when `upper_unbounded` is 0.
   */
  double upper;
  uint8_t upper_unbounded;
} TbDimensionBound;

typedef struct TbFitResult {
  double visibility;
  double visibility_err;
  double phase_offset;
  double baseline;
  double baseline_err;
  double residual_rms;
} TbFitResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *tb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tb_version(void);

/**
 * Creates a pulse train of `dimension` pulses. Pass `n_amplitudes = 0` for
 * uniform amplitudes and `n_phases = 0` for constant phases; otherwise the
 * array length must equal `dimension`. A nonpositive `bin_spacing_ns`
 * selects the default of 13 ns.
 *
 * # Safety
 * `amplitudes` and `phases` must point to at least `n_amplitudes` and
 * `n_phases` doubles; `out` must be a valid pointer.
 */
enum TbStatus tb_pulse_train_new(size_t dimension,
                                 const double *amplitudes,
                                 size_t n_amplitudes,
                                 const double *phases,
                                 size_t n_phases,
                                 double bin_spacing_ns,
                                 struct TbPulseTrain **out);

/**
 * # Safety
 * `train` must be null or a handle from `tb_pulse_train_new` not yet freed.
 */
void tb_pulse_train_free(struct TbPulseTrain *train);

/**
 * # Safety
 * `train` must be a live handle and `out` a valid pointer.
 */
enum TbStatus tb_pulse_train_dimension(const struct TbPulseTrain *train, size_t *out);

/**
 * Writes 1 if the supplied amplitudes had to be rescaled to unit norm.
 *
 * # Safety
 * `train` must be a live handle and `out` a valid pointer.
 */
enum TbStatus tb_pulse_train_was_renormalized(const struct TbPulseTrain *train, uint8_t *out);

/**
 * Pair state `sum_j c_j e^{i phi_j} |j, j>` of the train.
 *
 * # Safety
 * `train` must be a live handle and `out` a valid pointer.
 */
enum TbStatus tb_pdc_state(const struct TbPulseTrain *train, struct TbState **out);

/**
 * Sends both photons of `state` through the monitored port of a two-way
 * analyzer with long-arm phase `delta` and per-path amplitude
 * `per_path_amplitude` (0.5 for a balanced analyzer).
 *
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum TbStatus tb_apply_two_way(const struct TbState *state,
                               double delta,
                               double per_path_amplitude,
                               struct TbState **out);

/**
 * # Safety
 * `state` must be null or a live handle.
 */
void tb_state_free(struct TbState *state);

/**
 * Number of stored bin pairs.
 *
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum TbStatus tb_state_len(const struct TbState *state, size_t *out);

/**
 * Entry `index` in ascending `(bin_a, bin_b)` order.
 *
 * # Safety
 * `state` must be a live handle; all out-pointers must be valid.
 */
enum TbStatus tb_state_entry(const struct TbState *state,
                             size_t index,
                             size_t *bin_a,
                             size_t *bin_b,
                             double *re,
                             double *im);

/**
 * Amplitude of `|bin_a, bin_b>` (1-based bins); zero when absent.
 *
 * # Safety
 * `state` must be a live handle; `re` and `im` valid pointers.
 */
enum TbStatus tb_state_amplitude(const struct TbState *state,
                                 size_t bin_a,
                                 size_t bin_b,
                                 double *re,
                                 double *im);

/**
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum TbStatus tb_total_probability(const struct TbState *state, double *out);

/**
 * `tau = 0` coincidence probability of the balanced two-way analyzer.
 *
 * # Safety
 * `train` must be a live handle and `out` a valid pointer.
 */
enum TbStatus tb_coincidence_probability_two_way(const struct TbPulseTrain *train,
                                                 double delta,
                                                 uint8_t discard_edges,
                                                 double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum TbStatus tb_max_visibility(size_t dimension, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum TbStatus tb_dimension_bound(double visibility,
                                 double visibility_err,
                                 struct TbDimensionBound *out);

/**
 * Amplitude for one photon to leave the fiber loop after `n` round trips,
 * with round-trip phase `phase`.
 *
 * # Safety
 * `re` and `im` must be valid pointers.
 */
enum TbStatus tb_loop_exit_amplitude(size_t n, double t2, double phase, double *re, double *im);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum TbStatus tb_fp_coincidence_closed(double t2, double phi_sum, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum TbStatus tb_fp_coincidence_series(double t2, double phi_sum, size_t max_loops, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum TbStatus tb_fp_visibility(double t2, size_t grid_points, double *out);

/**
 * Fits `B (1 + V cos(2 delta + phase))` to `n` points. `count_errs` may be
 * null, in which case Poisson errors `sqrt(max(count, 1))` are used.
 *
 * # Safety
 * `deltas` and `counts` (and `count_errs` if non-null) must point to `n`
 * doubles; `out` must be a valid pointer.
 */
enum TbStatus tb_fit_fringe(const double *deltas,
                            const double *counts,
                            const double *count_errs,
                            size_t n,
                            struct TbFitResult *out);

/**
 * Removes a flat accidental level (counts per point) from a fit.
 *
 * # Safety
 * `raw` and `out` must be valid pointers.
 */
enum TbStatus tb_net_visibility(const struct TbFitResult *raw,
                                double accidental_rate,
                                struct TbFitResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIMEBIN_H */
