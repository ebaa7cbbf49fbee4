#ifndef MAGNONGATE_H
#define MAGNONGATE_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define MG_GATE_ISWAP 0

#define MG_GATE_SQRT_ISWAP 1

#define MG_GATE_CZ 2

#define MG_GATE_ICNOT 3

#define MG_REPORT_PARAMS 0

#define MG_REPORT_GEOMETRY 1

#define MG_REPORT_SCENARIOS 2

#define MG_REPORT_VERIFY_SW 3

typedef enum MgStatus {
  MG_STATUS_OK = 0,
  MG_STATUS_NULL_POINTER = 1,
  MG_STATUS_INVALID_UTF8 = 2,
  MG_STATUS_OUT_OF_RANGE = 3,
  MG_STATUS_DIMENSION = 4,
  MG_STATUS_INVALID_ARGUMENT = 5,
  MG_STATUS_PRECONDITION = 6,
  MG_STATUS_REGIME = 7,
  MG_STATUS_PROPAGATION = 8,
  MG_STATUS_GEOMETRY = 9,
  MG_STATUS_CONFIG = 10,
  MG_STATUS_PARSE = 11,
  MG_STATUS_IO = 12,
  MG_STATUS_PANIC = 13,
} MgStatus;

/**
 * Run configuration handle.
 */
typedef struct MgConfig MgConfig;

/**
 * Sweep result handle; keeps the configuration it was run with.
 */
typedef struct MgSweep MgSweep;

/**
 * One gate evaluation. Frequencies in Hz, times in s.
 */
typedef struct MgGateResult {
  double avg_fidelity;
  double average_leakage;
  double max_leakage;
  double t_gate_s;
  double coupling_hz;
  double n_th;
  double e_r;
} MgGateResult;

/**
 * One sweep point. Values of a failed point are NaN and `ok` is false.
 */
typedef struct MgSweepRow {
  double omega_m_ratio;
  double omega_m_hz;
  double e_r;
  double n_th;
  double kappa_hz;
  double coupling_hz;
  double t_gate_s;
  double avg_fidelity;
  double leakage;
  bool ok;
} MgSweepRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mg_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mg_last_error_message(void);

/**
 * Forgets the last error of this thread.
 */
void mg_clear_last_error(void);

/**
 * Default configuration of gate `gate` (an `MG_GATE_*` code).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum MgStatus mg_config_new(int gate, struct MgConfig **out);

/**
 * Configuration parsed from TOML text.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be valid for one write.
 */
enum MgStatus mg_config_parse(const char *text, struct MgConfig **out);

/**
 * Configuration read from a TOML file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid for one write.
 */
enum MgStatus mg_config_load(const char *path, struct MgConfig **out);

/**
 * Releases a configuration handle. NULL is ignored.
 *
 * # Safety
 * `cfg` must come from `mg_config_*` and not be used afterwards.
 */
void mg_config_free(struct MgConfig *cfg);

/**
 * The configured gate as an `MG_GATE_*` code.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be valid for one write.
 */
enum MgStatus mg_config_gate(const struct MgConfig *cfg, int *out);

/**
 * Sets the Fock sizes (q1, q2, m). The handle is unchanged on failure.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum MgStatus mg_config_set_dims(struct MgConfig *cfg, size_t q1, size_t q2, size_t m);

/**
 * Selects direct-coupling (true) or derived (false) mode.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum MgStatus mg_config_set_direct(struct MgConfig *cfg, bool direct);

/**
 * Evaluates sweep points in parallel (true) or serially (false).
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum MgStatus mg_config_set_parallel(struct MgConfig *cfg, bool parallel);

/**
 * Replaces the sweep grid by `len` explicit ratios ω_m/ω_q.
 *
 * # Safety
 * `cfg` must be a live handle; `ratios` must point to `len` values.
 */
enum MgStatus mg_config_set_ratios(struct MgConfig *cfg, const double *ratios, size_t len);

/**
 * Evaluates the configured gate at one ratio with the configured dims
 * and magnon initial state.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be valid for one write.
 */
enum MgStatus mg_evaluate(const struct MgConfig *cfg, double ratio, struct MgGateResult *out);

/**
 * Runs the configured sweep. Points that fail are kept with `ok` false.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be valid for one write.
 */
enum MgStatus mg_sweep_run(const struct MgConfig *cfg, struct MgSweep **out);

/**
 * Number of points in a sweep; 0 for NULL.
 *
 * # Safety
 * `sweep` must be NULL or a live handle.
 */
size_t mg_sweep_len(const struct MgSweep *sweep);

/**
 * Copies point `index` of a sweep.
 *
 * # Safety
 * `sweep` must be a live handle; `out` must be valid for one write.
 */
enum MgStatus mg_sweep_row(const struct MgSweep *sweep, size_t index, struct MgSweepRow *out);

/**
 * Index of the highest-fidelity point of a sweep.
 *
 * # Safety
 * `sweep` must be a live handle; `out` must be valid for one write.
 */
enum MgStatus mg_sweep_optimum(const struct MgSweep *sweep, size_t *out);

/**
 * The sweep as CSV text, identical to the command-line output.
 *
 * # Safety
 * `sweep` must be a live handle; `out` must be valid for one write.
 * Release the string with `mg_string_free`.
 */
enum MgStatus mg_sweep_csv(const struct MgSweep *sweep, char **out);

/**
 * Releases a sweep handle. NULL is ignored.
 *
 * # Safety
 * `sweep` must come from `mg_sweep_run` and not be used afterwards.
 */
void mg_sweep_free(struct MgSweep *sweep);

/**
 * One of the `MG_REPORT_*` reports as JSON text.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be valid for one write.
 * Release the string with `mg_string_free`.
 */
enum MgStatus mg_report_json(const struct MgConfig *cfg, int report, char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void mg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGNONGATE_H */
