/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef CHIRPWAVE_H
#define CHIRPWAVE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CwStatus {
  CW_OK = 0,
  CW_NULL_POINTER = 1,
  CW_INVALID_ARGUMENT = 2,
  CW_LENGTH_MISMATCH = 3,
  CW_CONFIG = 4,
  CW_IO = 5,
  CW_NUMERICAL = 6,
  CW_PANIC = 7,
} CwStatus;

typedef enum CwSweepKind {
  CW_SWEEP_SPEED = 0,
  CW_SWEEP_ROLLOFF = 1,
  CW_SWEEP_SPAN = 2,
} CwSweepKind;

typedef struct CwConfig CwConfig;

typedef struct CwFilter CwFilter;

// DAFT plan for one chirp configuration.
typedef struct CwPlan CwPlan;

typedef struct CwSweep CwSweep;

// Interleaved complex sample, layout-compatible with `double _Complex`.
typedef struct CwComplex {
  double re;
  double im;
} CwComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *cw_last_error_message(void);

void cw_clear_last_error(void);

// Static NUL-terminated version string.
const char *cw_version(void);

// Plan for `n` subcarriers over a frame of `duration` seconds with chirp
// rates `c1`, `c2`.
//
// # Safety
// `out_plan` must be a valid pointer to writable storage for one handle.
enum CwStatus cw_plan_new(uintptr_t n,
                          double duration,
                          double c1,
                          double c2,
                          struct CwPlan **out_plan);

// # Safety
// `plan` must be NULL or a handle from [`cw_plan_new`] not yet freed.
void cw_plan_free(struct CwPlan *plan);

// Number of subcarriers, or 0 for a NULL plan.
//
// # Safety
// `plan` must be NULL or a live handle.
uintptr_t cw_plan_len(const struct CwPlan *plan);

// Inverse DAFT: `len` symbols in, `len` time samples out. Input and output
// may alias.
//
// # Safety
// `input` and `output` must each point to `len` elements.
enum CwStatus cw_plan_modulate(const struct CwPlan *plan,
                               const struct CwComplex *input,
                               struct CwComplex *output,
                               uintptr_t len);

// Forward DAFT, the inverse of [`cw_plan_modulate`].
//
// # Safety
// `input` and `output` must each point to `len` elements.
enum CwStatus cw_plan_demodulate(const struct CwPlan *plan,
                                 const struct CwComplex *input,
                                 struct CwComplex *output,
                                 uintptr_t len);

// Unit-energy SRRC filter with roll-off `beta`, span `q` symbols and `o`
// samples per symbol period `ts`.
//
// # Safety
// `out_filter` must be a valid pointer.
enum CwStatus cw_srrc_new(double beta,
                          uintptr_t q,
                          uintptr_t o,
                          double ts,
                          struct CwFilter **out_filter);

// # Safety
// `filter` must be NULL or a live handle.
void cw_srrc_free(struct CwFilter *filter);

// Number of taps, Q·O + 1, or 0 for NULL.
//
// # Safety
// `filter` must be NULL or a live handle.
uintptr_t cw_srrc_len(const struct CwFilter *filter);

// Copies the taps into `taps`, which must hold exactly [`cw_srrc_len`] values.
//
// # Safety
// `taps` must point to `len` writable doubles.
enum CwStatus cw_srrc_taps(const struct CwFilter *filter, double *taps, uintptr_t len);

// Experiment configuration with every key at its default.
//
// # Safety
// `out_config` must be a valid pointer.
enum CwStatus cw_config_default(struct CwConfig **out_config);

// Reads a `key = value` configuration file.
//
// # Safety
// `path` must be a NUL-terminated string and `out_config` a valid pointer.
enum CwStatus cw_config_load(const char *path, struct CwConfig **out_config);

// # Safety
// `config` must be NULL or a live handle.
void cw_config_free(struct CwConfig *config);

// # Safety
// `config` must be NULL or a live handle.
enum CwStatus cw_config_set_seed(struct CwConfig *config, uint64_t seed);

// # Safety
// `config` must be NULL or a live handle.
enum CwStatus cw_config_set_trials(struct CwConfig *config, uintptr_t trials);

// Switches to the desk-scale setup: N = 256, at most 20 trials, O ≤ 8.
//
// # Safety
// `config` must be NULL or a live handle.
enum CwStatus cw_config_small(struct CwConfig *config);

// Runs an NMSE sweep over the configured (or default) values.
//
// # Safety
// `config` must be a live handle and `out_sweep` a valid pointer.
enum CwStatus cw_nmse_run(const struct CwConfig *config,
                          enum CwSweepKind kind,
                          struct CwSweep **out_sweep);

// # Safety
// `sweep` must be NULL or a live handle.
void cw_sweep_free(struct CwSweep *sweep);

// Number of sweep points, or 0 for NULL.
//
// # Safety
// `sweep` must be NULL or a live handle.
uintptr_t cw_sweep_len(const struct CwSweep *sweep);

// Point `index`: swept value, mean NMSE in dB and its standard error.
//
// # Safety
// All out-pointers must be valid.
enum CwStatus cw_sweep_point(const struct CwSweep *sweep,
                             uintptr_t index,
                             double *value,
                             double *nmse_db,
                             double *stderr_db);

// Writes `sweep_value,nmse_db,stderr_db` rows to `path`.
//
// # Safety
// `path` must be a NUL-terminated string.
enum CwStatus cw_sweep_write_csv(const struct CwSweep *sweep, const char *path);

// Evaluates acceptance criterion `id` (1..=13). `full` selects the
// full-size NMSE sweeps.
//
// # Safety
// `passed` must be a valid pointer.
enum CwStatus cw_selftest_criterion(uint8_t id, bool full, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHIRPWAVE_H */
