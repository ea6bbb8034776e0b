#ifndef VHETSIM_H
#define VHETSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  VHETSIM_STATUS_OK = 0,
  VHETSIM_STATUS_NULL_POINTER = 1,
  VHETSIM_STATUS_INVALID_ARGUMENT = 2,
  VHETSIM_STATUS_CONFIG = 3,
  VHETSIM_STATUS_IO = 4,
  VHETSIM_STATUS_NUMERICAL = 5,
  VHETSIM_STATUS_UTF8 = 6,
  VHETSIM_STATUS_PANIC = 7,
} VhetsimStatus;

typedef enum {
  VHETSIM_SCENARIO_CS1 = 1,
  VHETSIM_SCENARIO_CS2 = 2,
} VhetsimScenario;

/**
 * Opaque experiment configuration.
 */
typedef struct VhetsimConfig VhetsimConfig;

/**
 * Opaque result of `vhetsim_run`.
 */
typedef struct VhetsimReport VhetsimReport;

/**
 * One summary line. The string pointers borrow from the report and stay
 * valid until it is freed.
 */
typedef struct {
  const char *scheme;
  const char *metric_name;
  /**
   * 0 when the row has no sweep value.
   */
  int32_t has_sweep_value;
  double sweep_value;
  size_t count;
  double mean;
  double p5;
  double p50;
} VhetsimSummaryRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. Owned by the
 * library; do not free.
 */
const char *vhetsim_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void vhetsim_string_free(char *s);

/**
 * Parses a JSON configuration document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
VhetsimStatus vhetsim_config_parse(const char *json, VhetsimConfig **out);

/**
 * Default configuration for a scenario.
 *
 * # Safety
 * `out` must be writable.
 */
VhetsimStatus vhetsim_config_default(VhetsimScenario scenario, VhetsimConfig **out);

/**
 * # Safety
 * `cfg` must be null or a live handle from this library.
 */
void vhetsim_config_free(VhetsimConfig *cfg);

/**
 * Sets the master seed and trial counts. Counts must be at least 1.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
VhetsimStatus vhetsim_config_set_plan(VhetsimConfig *cfg,
                                      uint64_t master_seed,
                                      size_t topologies,
                                      size_t realizations);

/**
 * # Safety
 * `cfg` must be a live handle; `dir` a NUL-terminated UTF-8 path.
 */
VhetsimStatus vhetsim_config_set_output_dir(VhetsimConfig *cfg, const char *dir);

/**
 * Full JSON rendering of the configuration; free with `vhetsim_string_free`.
 *
 * # Safety
 * `cfg` must be a live handle; `out` writable.
 */
VhetsimStatus vhetsim_config_to_json(const VhetsimConfig *cfg, char **out);

/**
 * Runs the experiment, writes the CSV files into the configured output
 * directory and returns the summary. `threads` = 0 uses the default pool.
 *
 * # Safety
 * `cfg` must be a live handle; `out` writable.
 */
VhetsimStatus vhetsim_run(const VhetsimConfig *cfg, size_t threads, VhetsimReport **out);

/**
 * Number of summary rows; 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t vhetsim_report_len(const VhetsimReport *report);

/**
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
VhetsimStatus vhetsim_report_row(const VhetsimReport *report, size_t index, VhetsimSummaryRow *out);

/**
 * Writes the crossover element count and returns 1, or returns 0 when the
 * report has none.
 *
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
int32_t vhetsim_report_crossover(const VhetsimReport *report, double *out);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
void vhetsim_report_free(VhetsimReport *report);

/**
 * Free-space path loss in dB.
 *
 * # Safety
 * `out` must be writable.
 */
VhetsimStatus vhetsim_fspl_db(double distance_m, double frequency_hz, double *out);

/**
 * Free-space loss plus molecular absorption in dB.
 *
 * # Safety
 * `out` must be writable.
 */
VhetsimStatus vhetsim_subthz_pathloss_db(double distance_m,
                                         double frequency_hz,
                                         double absorption_db_per_km,
                                         double *out);

/**
 * Thermal noise power in dBm.
 *
 * # Safety
 * `out` must be writable.
 */
VhetsimStatus vhetsim_noise_power_dbm(double psd_dbm_hz, double bandwidth_hz, double *out);

/**
 * Nearest-rank percentile of `n` samples, `p` in (0, 100).
 *
 * # Safety
 * `samples` must point to `n` readable doubles; `out` writable.
 */
VhetsimStatus vhetsim_percentile(const double *samples, size_t n, double p, double *out);

/**
 * Max-min power allocation for `relays x users` two-hop links. Inputs are
 * row-major `relays x users` arrays of hop-1 SINRs and hop-2 gains; `budget`
 * is the transmit power budget of each relay. Writes the row-major power
 * matrix into `q_out` and the achieved minimum SINR into `min_sinr_out`.
 *
 * # Safety
 * Array pointers must cover `relays * users` doubles.
 */
VhetsimStatus vhetsim_maxmin_allocate(const double *hop1_sinr,
                                      const double *hop2_gain,
                                      size_t relays,
                                      size_t users,
                                      double budget,
                                      double tolerance,
                                      double *q_out,
                                      double *min_sinr_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VHETSIM_H */
