#ifndef BRIDGEKIT_H
#define BRIDGEKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of one ABI call.
typedef enum {
  // The call succeeded.
  BRIDGEKIT_STATUS_OK = 0,
  // A required pointer argument was null.
  BRIDGEKIT_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  BRIDGEKIT_STATUS_INVALID_UTF8 = 2,
  // A bundle could not be read or failed integrity validation.
  BRIDGEKIT_STATUS_INVALID_BUNDLE = 3,
  // A JSON configuration document could not be parsed or was rejected.
  BRIDGEKIT_STATUS_INVALID_CONFIG = 4,
  // A pipeline stage failed.
  BRIDGEKIT_STATUS_PIPELINE_FAILED = 5,
  // Final votes were missing or inconsistent with the statement set.
  BRIDGEKIT_STATUS_TALLY_FAILED = 6,
  // A file could not be read or written.
  BRIDGEKIT_STATUS_IO_FAILED = 7,
  // The library panicked; treat in-process state as suspect.
  BRIDGEKIT_STATUS_PANIC = 8,
} BridgekitStatus;

// Opaque handle to a loaded dialogue bundle.
typedef struct BridgekitBundle BridgekitBundle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The library version as a static NUL-terminated string.
const char *bridgekit_version(void);

// Describes the current thread's most recent failure.
//
// The returned pointer stays valid until the next failing call on this
// thread. The string is empty when nothing has failed yet; it is only
// meaningful after a call returned a non-`Ok` status.
const char *bridgekit_last_error(void);

// Loads and validates the bundle directory at `dir` into a new handle
// written to `out`. Bundles with integrity violations are refused; use
// [`bridgekit_validate`] to inspect the violations of a suspect directory.
//
// # Safety
// `dir` must be a valid NUL-terminated string and `out` a valid pointer.
// The handle written to `out` must be released with
// [`bridgekit_bundle_free`].
BridgekitStatus bridgekit_bundle_load(const char *dir, BridgekitBundle **out);

// Reads the bundle directory at `dir` without refusing violations and
// writes its validation report to `out` as JSON: an object whose
// `violations` array is empty exactly when the bundle is clean.
//
// # Safety
// `dir` must be a valid NUL-terminated string and `out` a valid pointer.
// The string written to `out` must be released with
// [`bridgekit_string_free`].
BridgekitStatus bridgekit_validate(const char *dir, char **out);

// Number of participants in the bundle; 0 when `bundle` is null.
//
// # Safety
// `bundle` must be null or a live handle from [`bridgekit_bundle_load`].
size_t bridgekit_bundle_participant_count(const BridgekitBundle *bundle);

// Number of statements in the bundle; 0 when `bundle` is null.
//
// # Safety
// `bundle` must be null or a live handle from [`bridgekit_bundle_load`].
size_t bridgekit_bundle_statement_count(const BridgekitBundle *bundle);

// Number of groups in the bundle's partition; 0 when `bundle` is null.
//
// # Safety
// `bundle` must be null or a live handle from [`bridgekit_bundle_load`].
size_t bridgekit_bundle_group_count(const BridgekitBundle *bundle);

// Whether the bundle carries final votes; false when `bundle` is null.
//
// # Safety
// `bundle` must be null or a live handle from [`bridgekit_bundle_load`].
bool bridgekit_bundle_has_final_votes(const BridgekitBundle *bundle);

// Runs the full pipeline described by `config_json` (the same document the
// CLI accepts via `--config`) and writes the run report to `out` as JSON.
//
// # Safety
// `config_json` must be a valid NUL-terminated string and `out` a valid
// pointer. The string written to `out` must be released with
// [`bridgekit_string_free`].
BridgekitStatus bridgekit_run(const char *config_json, char **out);

// Tallies the bundle's final votes and writes the result to `out` as JSON.
//
// `statements_json` is an optional JSON array of statement ids giving the
// tally universe; ballots are projected onto it. Pass null to use every
// statement appearing in the rank ballots.
//
// # Safety
// `bundle` must be a live handle from [`bridgekit_bundle_load`],
// `statements_json` null or a valid NUL-terminated string, and `out` a
// valid pointer. The string written to `out` must be released with
// [`bridgekit_string_free`].
BridgekitStatus bridgekit_tally(const BridgekitBundle *bundle,
                                const char *statements_json,
                                char **out);

// Generates a synthetic dialogue bundle into `out_dir`, writing the bundle
// files plus `manifest.json` describing the planted statement classes.
//
// `spec_json` optionally overrides the default generation parameters; pass
// null for the defaults. When `out_manifest` is non-null, the manifest is
// also written to it as JSON.
//
// # Safety
// `out_dir` must be a valid NUL-terminated string; `spec_json` null or a
// valid NUL-terminated string; `out_manifest` null or a valid pointer. A
// string written to `out_manifest` must be released with
// [`bridgekit_string_free`].
BridgekitStatus bridgekit_synth(const char *spec_json, const char *out_dir, char **out_manifest);

// Releases a bundle handle. Null is ignored.
//
// # Safety
// `bundle` must be null or a handle from [`bridgekit_bundle_load`] that has
// not been freed already.
void bridgekit_bundle_free(BridgekitBundle *bundle);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string this library returned that has not been
// freed already.
void bridgekit_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRIDGEKIT_H */
