#ifndef HETDET_H
#define HETDET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which field partition the analytic spectrum is evaluated under.
 */
enum HetdetHypothesis
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  /**
   * Use the hypothesis named in the configuration.
   */
  HETDET_HYPOTHESIS_CONFIGURED = 0,
  HETDET_HYPOTHESIS_ONE_FIELD = 1,
  HETDET_HYPOTHESIS_THREE_FIELDS = 2,
};
#ifndef __cplusplus
typedef int32_t HetdetHypothesis;
#endif // __cplusplus

/**
 * Result codes shared by every function.
 */
enum HetdetStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  HETDET_STATUS_OK = 0,
  HETDET_STATUS_NULL_POINTER = 1,
  HETDET_STATUS_INVALID_ARGUMENT = 2,
  HETDET_STATUS_PARSE_ERROR = 3,
  HETDET_STATUS_CONFIG_VIOLATION = 4,
  HETDET_STATUS_UNSUPPORTED = 5,
  HETDET_STATUS_NUMERICAL_ERROR = 6,
  HETDET_STATUS_IO_ERROR = 7,
  HETDET_STATUS_PANIC = 8,
};
#ifndef __cplusplus
typedef int32_t HetdetStatus;
#endif // __cplusplus

/**
 * Parsed run configuration.
 */
typedef struct HetdetConfig HetdetConfig;

/**
 * Power spectral density on a frequency grid.
 */
typedef struct HetdetSpectrum HetdetSpectrum;

/**
 * One row of the noise-figure table.
 */
typedef struct HetdetTableRow {
  double power_w;
  double snr_in_db;
  double snr_out_db;
  double nf_db;
} HetdetTableRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *hetdet_last_error_message(void);

/**
 * Parses a configuration from `key = value` text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
HetdetStatus hetdet_config_from_str(const char *text, struct HetdetConfig **out);

/**
 * Parses a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
HetdetStatus hetdet_config_from_file(const char *path, struct HetdetConfig **out);

/**
 * Overrides the RNG seed.
 *
 * # Safety
 * `cfg` must come from `hetdet_config_from_*` and not be freed.
 */
HetdetStatus hetdet_config_set_seed(struct HetdetConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void hetdet_config_free(struct HetdetConfig *cfg);

/**
 * Analytic PSD of the differenced current on the configured grid.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
HetdetStatus hetdet_psd_analytic(const struct HetdetConfig *cfg,
                                 HetdetHypothesis hypothesis,
                                 struct HetdetSpectrum **out);

/**
 * Number of points in the spectrum (0 for null).
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t hetdet_spectrum_len(const struct HetdetSpectrum *s);

/**
 * Frequencies in Hz; `len` entries owned by the handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
const double *hetdet_spectrum_freqs(const struct HetdetSpectrum *s);

/**
 * PSD values; `len` entries owned by the handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
const double *hetdet_spectrum_psd(const struct HetdetSpectrum *s);

/**
 * Resolution bandwidth in Hz (NaN for null).
 *
 * # Safety
 * `s` must be null or a live handle.
 */
double hetdet_spectrum_rbw(const struct HetdetSpectrum *s);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void hetdet_spectrum_free(struct HetdetSpectrum *s);

/**
 * Noise figure in dB for the configured coherent input. NaN when there is no signal.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
HetdetStatus hetdet_noise_figure(const struct HetdetConfig *cfg, double *out);

/**
 * Noise-figure table for `n` optical powers (W), written into `rows[0..n]`.
 *
 * # Safety
 * `powers` and `rows` must each point to `n` elements.
 */
HetdetStatus hetdet_table1(const double *powers,
                           size_t n,
                           double window_s,
                           double eta,
                           double photon_energy_j,
                           struct HetdetTableRow *rows);

/**
 * Runs the configured Monte Carlo scenario and returns its report as JSON.
 * `passed` receives 1 when every tolerance check holds.
 *
 * # Safety
 * `cfg` must be a live handle; `json_out` a valid pointer; `passed` may be null.
 */
HetdetStatus hetdet_simulate_json(const struct HetdetConfig *cfg, char **json_out, int32_t *passed);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void hetdet_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HETDET_H */
