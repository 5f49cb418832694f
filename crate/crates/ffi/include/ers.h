#ifndef ERS_H
#define ERS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum ErsStatus {
  ERS_STATUS_OK = 0,
  ERS_STATUS_NULL_POINTER = 1,
  // Malformed text, bad parameter or argument outside a function's domain.
  ERS_STATUS_INVALID_ARGUMENT = 2,
  ERS_STATUS_UNSUPPORTED = 3,
  ERS_STATUS_NUMERIC = 4,
  ERS_STATUS_DIVERGENCE = 5,
  ERS_STATUS_ILL_CONDITIONED = 6,
  ERS_STATUS_STRUCTURAL = 7,
  ERS_STATUS_IO = 8,
  // A Rust panic was caught at the boundary.
  ERS_STATUS_INTERNAL = 9,
  ERS_STATUS_OUT_OF_RANGE = 10,
} ErsStatus;

// Opaque attracting law.
typedef struct ErsLaw ErsLaw;

// Opaque simulation result: a trace plus its settling report.
typedef struct ErsTrace ErsTrace;

// Settling-time estimate. `formula` indexes the label table read through
// [`ers_formula_label`].
typedef struct ErsEstimate {
  // 0 for an exact time, 1 for an upper bound.
  uint32_t kind;
  double time;
  uint32_t formula;
} ErsEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next
// failing call on the same thread.
const char *ers_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ers_version(void);

// Label of formula `index`, or null when out of range. The string is static.
const char *ers_formula_label(uint32_t index);

// Parse a law from a TOML inline table such as
// `{ type = "SPRL", kappa = 1.0, gamma = 0.5 }` and validate it.
//
// # Safety
// `source` must be a NUL-terminated string and `out` a writable pointer.
enum ErsStatus ers_law_parse(const char *source, struct ErsLaw **out);

// # Safety
// `law` must be null or a handle from [`ers_law_parse`] not yet freed.
void ers_law_free(struct ErsLaw *law);

// Rectifying action `r(e)`.
//
// # Safety
// `law` must be a live handle and `out` writable.
enum ErsStatus ers_law_rectify(const struct ErsLaw *law, double e, double *out);

// Exact settling time from `|e0|`. Returns `Unsupported` for laws with
// bounds only.
//
// # Safety
// `law` must be a live handle and `out` writable.
enum ErsStatus ers_settling_time(const struct ErsLaw *law, double e0, struct ErsEstimate *out);

// Tightest uniform settling bound over all initial errors.
//
// # Safety
// `law` must be a live handle and `out` writable.
enum ErsStatus ers_settling_bound(const struct ErsLaw *law, struct ErsEstimate *out);

// Residual radius under smooth compensation with width `epsilon`, gains
// split in half.
//
// # Safety
// `law` must be a live handle and `out` writable.
enum ErsStatus ers_residual_radius(const struct ErsLaw *law, double epsilon, double *out);

// Integrate the undisturbed scalar error dynamics from `e0`.
//
// # Safety
// `law` must be a live handle and `out` writable.
enum ErsStatus ers_simulate_scalar(const struct ErsLaw *law,
                                   double e0,
                                   double dt,
                                   double horizon,
                                   struct ErsTrace **out);

// Run the first `[[scenario]]` of a TOML config document.
//
// # Safety
// `config` must be a NUL-terminated string and `out` writable.
enum ErsStatus ers_run_scenario(const char *config, struct ErsTrace **out);

// # Safety
// `trace` must be null or a handle not yet freed.
void ers_trace_free(struct ErsTrace *trace);

// Number of samples; 0 for a null handle.
//
// # Safety
// `trace` must be null or a live handle.
size_t ers_trace_len(const struct ErsTrace *trace);

// Error components per sample; 0 for a null handle.
//
// # Safety
// `trace` must be null or a live handle.
size_t ers_trace_width(const struct ErsTrace *trace);

// Time and error components of sample `index`. `errors` must hold
// [`ers_trace_width`] values.
//
// # Safety
// `trace` must be a live handle, `time` writable, and `errors` writable for
// `ers_trace_width(trace)` doubles.
enum ErsStatus ers_trace_sample(const struct ErsTrace *trace,
                                size_t index,
                                double *time,
                                double *errors);

// First time after which every sample has `‖e‖∞ ≤ tol`, or a negative value
// when the trace never settles.
//
// # Safety
// `trace` must be a live handle.
double ers_trace_settling_time(const struct ErsTrace *trace, double tol);

// Settling report of a scenario run as JSON; null for plain scalar runs.
// Free with [`ers_string_free`].
//
// # Safety
// `trace` must be null or a live handle.
char *ers_trace_report_json(const struct ErsTrace *trace);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void ers_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ERS_H */
