#ifndef SYMBOLEO_H
#define SYMBOLEO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SymStatus {
  SYM_STATUS_OK = 0,
  // A required pointer argument was null.
  SYM_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  SYM_STATUS_INVALID_UTF8 = 2,
  // The input has errors; see the last diagnostics.
  SYM_STATUS_DIAGNOSTICS = 3,
  // An argument was malformed (bad JSON, bad timestamp).
  SYM_STATUS_INVALID_ARGUMENT = 4,
  // The contract instance rejected the operation.
  SYM_STATUS_RUNTIME_ERROR = 5,
  // An internal panic was caught at the boundary.
  SYM_STATUS_PANIC = 6,
} SymStatus;

// A running contract instance.
typedef struct SymInstance SymInstance;

// A parsed, validated specification.
typedef struct SymSpec SymSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses and validates `source`. On success stores a new handle in `*out`;
// on `SYM_STATUS_DIAGNOSTICS` leaves `*out` untouched.
//
// # Safety
// `source` must be a nul-terminated string; `out` must be writable.
enum SymStatus sym_spec_parse(const char *source, struct SymSpec **out);

// Releases a spec handle. Null is ignored.
//
// # Safety
// `spec` must come from [`sym_spec_parse`] and not be used afterwards.
void sym_spec_free(struct SymSpec *spec);

// Writes `{"valid": bool, "diagnostics": [...]}` for `source` to `*out`.
// Returns `SYM_STATUS_OK` even when the source is invalid.
//
// # Safety
// `source` must be a nul-terminated string; `out` must be writable.
enum SymStatus sym_spec_validate(const char *source, char **out);

// Writes the canonical text of `spec` to `*out`.
//
// # Safety
// `spec` must be a live handle; `out` must be writable.
enum SymStatus sym_spec_print(const struct SymSpec *spec, char **out);

// Writes the generated bundle as JSON (`contract`, `generator`, `files`,
// `loc`) to `*out`.
//
// # Safety
// `spec` must be a live handle; `out` must be writable.
enum SymStatus sym_generate_bundle_json(const struct SymSpec *spec, char **out);

// Starts an instance of `spec`. `params_json` is a JSON object of
// parameter values (null means none); `start` is `YYYY-MM-DD[THH:MM]`.
//
// # Safety
// Pointers must be null or valid as documented; `out` must be writable.
enum SymStatus sym_instance_new(const struct SymSpec *spec,
                                const char *params_json,
                                const char *start,
                                struct SymInstance **out);

// Releases an instance handle. Null is ignored.
//
// # Safety
// `instance` must come from [`sym_instance_new`] and not be used afterwards.
void sym_instance_free(struct SymInstance *instance);

// Records an event occurrence and writes the transition report to `*out`.
// `attributes_json` may be null for events without attributes.
//
// # Safety
// Pointers must be null or valid as documented; `out` must be writable.
enum SymStatus sym_instance_submit_event(struct SymInstance *instance,
                                         const char *event,
                                         const char *at,
                                         const char *attributes_json,
                                         char **out);

// Advances the clock and writes the transition report to `*out`.
//
// # Safety
// Pointers must be valid; `out` must be writable.
enum SymStatus sym_instance_tick(struct SymInstance *instance, const char *at, char **out);

// Exercises a power and writes the transition report to `*out`.
//
// # Safety
// Pointers must be valid; `out` must be writable.
enum SymStatus sym_instance_exert(struct SymInstance *instance, const char *power, char **out);

// Writes the status snapshot of an instance as JSON to `*out`.
//
// # Safety
// Pointers must be valid; `out` must be writable.
enum SymStatus sym_instance_status(const struct SymInstance *instance, char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void sym_string_free(char *s);

// Message for the last failure on this thread, or null if the last call
// succeeded. Owned by the library.
const char *sym_last_error_message(void);

// Diagnostics for the last failure on this thread as a JSON array, or null
// if the last call succeeded. Owned by the library.
const char *sym_last_error_diagnostics(void);

// Code of the first diagnostic in the last failure, e.g. `"E804"`, or null.
// Owned by the library; valid until the next call on this thread.
const char *sym_last_error_code(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMBOLEO_H */
