#ifndef DIOPH_LAB_H
#define DIOPH_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum DlStatus {
  DL_STATUS_OK = 0,
  DL_STATUS_NULL_ARGUMENT = 1,
  // Invalid parameters (lambda outside the window, k = 0, bad target text).
  DL_STATUS_DOMAIN = 2,
  // Working precision hit its cap or an exact tie was met.
  DL_STATUS_PRECISION = 3,
  // A construction or check failed.
  DL_STATUS_FAILED = 4,
  // I/O error or corrupt input.
  DL_STATUS_IO = 5,
  DL_STATUS_BUFFER_TOO_SMALL = 6,
  DL_STATUS_INDEX_OUT_OF_RANGE = 7,
  DL_STATUS_UTF8 = 8,
  DL_STATUS_PANIC = 9,
} DlStatus;

// A finished synthesis run.
typedef struct DlSynthesis DlSynthesis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the core library as a static NUL-terminated string.
const char *dl_version(void);

// Copy the message of the last failure on this thread into `buf`.
// Returns `DL_STATUS_OK` with an empty string when there was none.
//
// # Safety
// `buf` must be valid for `len` bytes; `needed` may be null.
enum DlStatus dl_last_error(char *buf, size_t len, size_t *needed);

// The root `g_k(lambda)` as a double.
//
// # Safety
// `out` must be a valid pointer.
enum DlStatus dl_root_gk(uint32_t k, double lambda, double *out);

// Run a synthesis. On success `*out` receives a handle to free with
// [`dl_synthesis_free`]; on failure it is set to null.
//
// # Safety
// `out` must be a valid pointer.
enum DlStatus dl_synthesize(double lambda,
                            uint32_t k,
                            size_t steps,
                            uint64_t q1,
                            struct DlSynthesis **out);

// Release a synthesis handle; null is ignored.
//
// # Safety
// `s` must come from [`dl_synthesize`] and not be used afterwards.
void dl_synthesis_free(struct DlSynthesis *s);

// Number of vectors in the run, 0 for null.
//
// # Safety
// `s` must be a live handle or null.
size_t dl_synthesis_len(const struct DlSynthesis *s);

// Coordinate `coord` (0 is the denominator `q`) of vector `index` (0-based) as a decimal string.
//
// # Safety
// `s` must be a live handle; `buf` valid for `len` bytes; `needed` may be null.
enum DlStatus dl_synthesis_coordinate(const struct DlSynthesis *s,
                                      size_t index,
                                      size_t coord,
                                      char *buf,
                                      size_t len,
                                      size_t *needed);

// The realized pattern word, e.g. `"BABA..."`; empty when the run is too short.
//
// # Safety
// `s` must be a live handle; `buf` valid for `len` bytes; `needed` may be null.
enum DlStatus dl_synthesis_word(const struct DlSynthesis *s, char *buf, size_t len, size_t *needed);

// 1 when every exact condition held, 0 otherwise or for null.
//
// # Safety
// `s` must be a live handle or null.
int32_t dl_synthesis_exact_ok(const struct DlSynthesis *s);

// Run the engine on the constructed point and compare the first `n` vectors.
// `*matched` receives the number of leading vectors found as consecutive records.
//
// # Safety
// `s` must be a live handle; `matched` a valid pointer.
enum DlStatus dl_synthesis_round_trip(const struct DlSynthesis *s, size_t n, size_t *matched);

// Analyze a target (same syntax as the command line) up to `q_max`, given
// as a decimal string. On success `*json` holds a report to free with
// [`dl_string_free`].
//
// # Safety
// `target` and `q_max` must be NUL-terminated strings; `json` a valid pointer.
enum DlStatus dl_analyze_json(const char *target, const char *q_max, char **json);

// Release a string returned by this library; null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void dl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIOPH_LAB_H */
