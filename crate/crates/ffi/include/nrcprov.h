#ifndef NRCPROV_H
#define NRCPROV_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum NrcStatus {
  NRC_STATUS_OK = 0,
  // A required pointer argument was null.
  NRC_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  NRC_STATUS_INVALID_UTF8 = 2,
  NRC_STATUS_SYNTAX = 3,
  NRC_STATUS_TYPE = 4,
  NRC_STATUS_ANALYSIS = 5,
  NRC_STATUS_EVAL = 6,
  // Malformed or ill-typed JSON input.
  NRC_STATUS_DATA = 7,
  NRC_STATUS_BUNDLE = 8,
  // The engine panicked; the handle arguments should be considered lost.
  NRC_STATUS_PANIC = 9,
  NRC_STATUS_OTHER = 10,
} NrcStatus;

// A compiled query.
typedef struct NrcQuery NrcQuery;

// The error message for the last failed call on this thread, or null.
// The pointer stays valid until the next call on the same thread.
const char *nrc_last_error(void);

// The library version as a static string.
const char *nrc_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` is null or a string from this library not yet freed.
void nrc_string_free(char *s);

// Parses and type-checks `source` against `types_json`, an object mapping
// each input variable to a type such as `"{(A: int, B: int)}"`.
//
// # Safety
// String arguments are null or NUL-terminated; `out` is null or writable.
enum NrcStatus nrc_query_compile(const char *source, const char *types_json, struct NrcQuery **out);

// Releases a query handle. Null is ignored.
//
// # Safety
// `q` is null or a handle from [`nrc_query_compile`] not yet freed.
void nrc_query_free(struct NrcQuery *q);

// The result type of the query, as text.
//
// # Safety
// `q` is a live handle; `out` is writable.
enum NrcStatus nrc_query_type(const struct NrcQuery *q, char **out);

// The desugared, elaborated query, as text.
//
// # Safety
// `q` is a live handle; `out` is writable.
enum NrcStatus nrc_query_core(const struct NrcQuery *q, char **out);

// Evaluates the query on plain JSON data and writes the plain result.
//
// # Safety
// `q` is a live handle; `data_json` is NUL-terminated; `out` is writable.
enum NrcStatus nrc_query_eval(const struct NrcQuery *q, const char *data_json, char **out);

// Evaluates the query with provenance tracking. `adata_json` is an
// annotated environment; when it is null, `data_json` is read as plain
// data and every node is colored by its path.
//
// # Safety
// `q` is a live handle; string arguments are null or NUL-terminated;
// `out` is writable.
enum NrcStatus nrc_query_track(const struct NrcQuery *q,
                               const char *adata_json,
                               const char *data_json,
                               char **out);

// Computes the annotated result type under `actx_json`, an object mapping
// each input variable to an annotated type. When it is null, every type
// node is annotated with its own path.
//
// # Safety
// `q` is a live handle; `actx_json` is null or NUL-terminated; `out` is
// writable.
enum NrcStatus nrc_query_analyze(const struct NrcQuery *q, const char *actx_json, char **out);

// Writes a slice bundle for the query. Inputs are as for
// [`nrc_query_track`]; `actx_json` may be null to leave out the static
// analysis.
//
// # Safety
// `q` is a live handle; string arguments are null or NUL-terminated;
// `out` is writable.
enum NrcStatus nrc_query_bundle(const struct NrcQuery *q,
                                const char *adata_json,
                                const char *data_json,
                                const char *actx_json,
                                char **out);

#endif  /* NRCPROV_H */
