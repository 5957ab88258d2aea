#ifndef TACTILE_H
#define TACTILE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TactileBackend {
  TACTILE_BACKEND_ORACLE = 0,
  /**
   * binary32 datapath with the default CORDIC configuration.
   */
  TACTILE_BACKEND_HYBRID = 1,
} TactileBackend;

/**
 * Signals stored per sample in a trace.
 */
typedef enum TactileSignal {
  TACTILE_SIGNAL_B = 0,
  TACTILE_SIGNAL_C = 1,
  TACTILE_SIGNAL_V = 2,
  TACTILE_SIGNAL_THETA_HSD = 3,
  TACTILE_SIGNAL_THETA_SD = 4,
  TACTILE_SIGNAL_L = 5,
  TACTILE_SIGNAL_S_OBJ = 6,
  TACTILE_SIGNAL_H = 7,
  TACTILE_SIGNAL_Q = 8,
  TACTILE_SIGNAL_P = 9,
} TactileSignal;

typedef enum TactileStatus {
  TACTILE_STATUS_OK = 0,
  TACTILE_STATUS_NULL_POINTER = 1,
  TACTILE_STATUS_INVALID_ARGUMENT = 2,
  TACTILE_STATUS_OUT_OF_ORDER_SAMPLE = 3,
  TACTILE_STATUS_UNREACHABLE = 4,
  TACTILE_STATUS_OUT_OF_RANGE = 5,
  TACTILE_STATUS_INTERNAL = 6,
} TactileStatus;

/**
 * Opaque channel handle.
 */
typedef struct TactileChannel TactileChannel;

/**
 * Opaque simulation trace handle.
 */
typedef struct TactileTrace TactileTrace;

/**
 * Channel parameters. `delay_min == delay_max` gives a constant delay,
 * otherwise a bounded random walk.
 */
typedef struct TactileChannelConfig {
  double sigma2[3];
  uint32_t delay_min;
  uint32_t delay_max;
  uint64_t seed;
  /**
   * Non-zero to use `initial_hold` instead of the first input.
   */
  uint8_t has_initial_hold;
  double initial_hold[3];
} TactileChannelConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t tactile_last_error(char *buf, size_t len);

/**
 * Quantize `x` to a signed fixed-point word of `total_bits` bits with
 * `frac_bits` fractional bits (round to nearest even, saturating).
 *
 * # Safety
 * `out_raw` must be null or valid for writing.
 */
enum TactileStatus tactile_float_to_fixed(double x,
                                          uint8_t total_bits,
                                          uint8_t frac_bits,
                                          int64_t *out_raw);

/**
 * Tool position for joint angles `q` on the default device geometry.
 *
 * # Safety
 * `q` must point to 3 readable doubles and `out` to 3 writable doubles.
 */
enum TactileStatus tactile_forward_kinematics(const double *q, enum TactileBackend b, double *out);

/**
 * Joint angles placing the tool at `p` on the default device geometry.
 *
 * # Safety
 * `p` must point to 3 readable doubles and `out` to 3 writable doubles.
 */
enum TactileStatus tactile_inverse_kinematics(const double *p, enum TactileBackend b, double *out);

/**
 * # Safety
 * `cfg` must be readable; `out` must be writable.
 */
enum TactileStatus tactile_channel_new(const struct TactileChannelConfig *cfg,
                                       struct TactileChannel **out);

/**
 * Feed sample `n` (0, 1, 2, ...) and read the channel output.
 *
 * # Safety
 * `ch` must come from `tactile_channel_new`; `input`/`out` must hold 3
 * doubles.
 */
enum TactileStatus tactile_channel_step(struct TactileChannel *ch,
                                        const double *input,
                                        uint64_t n,
                                        double *out);

/**
 * # Safety
 * `ch` must be null or come from `tactile_channel_new`, freed once.
 */
void tactile_channel_free(struct TactileChannel *ch);

/**
 * Run the loop described by a TOML scenario on one backend. Output paths
 * in the scenario are ignored; nothing is written to disk.
 *
 * # Safety
 * `scenario_toml` must be a NUL-terminated string; `out` must be writable.
 */
enum TactileStatus tactile_simulation_run(const char *scenario_toml,
                                          enum TactileBackend b,
                                          struct TactileTrace **out);

/**
 * # Safety
 * `t` must come from `tactile_simulation_run`; `out_len` must be writable.
 */
enum TactileStatus tactile_trace_len(const struct TactileTrace *t, size_t *out_len);

/**
 * Three components of `signal` at sample `n`.
 *
 * # Safety
 * `t` must come from `tactile_simulation_run`; `out` must hold 3 doubles.
 */
enum TactileStatus tactile_trace_get(const struct TactileTrace *t,
                                     size_t n,
                                     enum TactileSignal signal,
                                     double *out);

/**
 * # Safety
 * `t` must be null or come from `tactile_simulation_run`, freed once.
 */
void tactile_trace_free(struct TactileTrace *t);

/**
 * Per-device compute time allowed for a round-trip budget, seconds.
 */
double tactile_hardware_time_limit(double t_latency);

/**
 * Whole-number speedup of hardware taking `t_hardware` seconds against
 * the round-trip budget `t_latency`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TactileStatus tactile_speedup(double t_hardware, double t_latency, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TACTILE_H */
