#ifndef HOB_H
#define HOB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of an API call. Zero is success; everything else indicates the
// category of failure and leaves detail in the per-thread error message.
typedef enum {
  HOB_STATUS_OK = 0,
  // A required pointer argument was NULL.
  HOB_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  HOB_STATUS_INVALID_UTF8 = 2,
  // The configuration text could not be parsed.
  HOB_STATUS_PARSE_ERROR = 3,
  // The configuration parsed but violates a documented range.
  HOB_STATUS_INVALID_CONFIG = 4,
  // An argument (e.g. a mode name) is outside the documented set.
  HOB_STATUS_INVALID_ARGUMENT = 5,
  // The solver left the finite range or exhausted the analyticity band.
  HOB_STATUS_BLOWUP = 6,
  // A run completed but breached a hard monitor ceiling.
  HOB_STATUS_MONITOR_VIOLATION = 7,
  // Reading or writing run artifacts failed.
  HOB_STATUS_IO_ERROR = 8,
  // Any other runtime failure.
  HOB_STATUS_RUNTIME_ERROR = 9,
  // A panic was caught at the boundary; state may be inconsistent.
  HOB_STATUS_PANIC = 10,
} HobStatus;

// Opaque run-configuration handle.
typedef struct HobConfig HobConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the underlying crate as a static NUL-terminated string.
const char *hob_version(void);

// Copies the most recent error message on this thread into `buf`
// (truncated to `len` bytes including the terminating NUL) and returns
// the full length including the NUL. `buf` may be NULL to query the
// required length.
//
// # Safety
// `buf` must be NULL or valid for writes of `len` bytes.
size_t hob_last_error(char *buf, size_t len);

// Parses a TOML configuration document into a new handle stored in `*out`.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be valid for writes.
HobStatus hob_config_parse(const char *text, HobConfig **out);

// Reads and parses a configuration file into a new handle stored in `*out`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid for writes.
HobStatus hob_config_from_file(const char *path, HobConfig **out);

// Overrides the RNG seed of a parsed configuration.
//
// # Safety
// `cfg` must be a live handle from `hob_config_parse`/`hob_config_from_file`.
HobStatus hob_config_set_seed(HobConfig *cfg, uint64_t seed);

// Releases a configuration handle. NULL is a no-op.
//
// # Safety
// `cfg` must be NULL or a live handle; the handle is dead afterwards.
void hob_config_free(HobConfig *cfg);

// Runs `mode` ("limit", "eps", "convergence", "lemmas" or "selfconv")
// under `cfg`, writing artifacts into `out_dir`.
//
// # Safety
// `cfg` must be a live handle; `mode` and `out_dir` must be
// NUL-terminated strings.
HobStatus hob_execute(const HobConfig *cfg, const char *mode, const char *out_dir);

// Evaluates the equilibrium stress closure at shear `(q1, q2)` for
// material parameters `(theta, b)`. Writes the six components into
// `out` in the order t11, t22, t33, t12, t13, t23.
//
// # Safety
// `out` must be valid for writes of six doubles.
HobStatus hob_stress_closure(double q1, double q2, double theta, double b, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HOB_H */
