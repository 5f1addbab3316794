//! C ABI over bundle loading, validation, synthesis, pipeline runs, and
//! final-vote tallying.
//!
//! Conventions:
//! - Strings cross the boundary as NUL-terminated UTF-8.
//! - Output strings are heap-allocated and owned by the caller; release them
//!   with [`bridgekit_string_free`]. Bundle handles are released with
//!   [`bridgekit_bundle_free`].
//! - Every fallible call returns a [`BridgekitStatus`]. On any non-`Ok`
//!   status, [`bridgekit_last_error`] describes the failure for the current
//!   thread until the next failing call on the same thread.
//! - Structured inputs and outputs are JSON documents in the same formats
//!   the `bridgekit` CLI reads and writes.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use bridgekit::bridging::BridgingError;
use bridgekit::canonical::{to_canonical_json, write_canonical_json};
use bridgekit::completion::CompletionError;
use bridgekit::model::{
    load_bundle, read_bundle, save_bundle, validate_bundle, DialogueBundle, StatementId,
};
use bridgekit::pipeline::{run_pipeline, stage_tally, PipelineConfig, PipelineError};
use bridgekit::synth::{generate_synthetic_dialogue, SyntheticSpec, MANIFEST_FILE};

/// Outcome of one ABI call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BridgekitStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A bundle could not be read or failed integrity validation.
    InvalidBundle = 3,
    /// A JSON configuration document could not be parsed or was rejected.
    InvalidConfig = 4,
    /// A pipeline stage failed.
    PipelineFailed = 5,
    /// Final votes were missing or inconsistent with the statement set.
    TallyFailed = 6,
    /// A file could not be read or written.
    IoFailed = 7,
    /// The library panicked; treat in-process state as suspect.
    Panic = 8,
}

/// Opaque handle to a loaded dialogue bundle.
pub struct BridgekitBundle {
    inner: DialogueBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let cleaned = message.replace('\0', "\u{fffd}");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).expect("NUL bytes were replaced");
    });
}

fn fail(status: BridgekitStatus, message: impl AsRef<str>) -> BridgekitStatus {
    set_last_error(message.as_ref());
    status
}

fn guarded(body: impl FnOnce() -> BridgekitStatus) -> BridgekitStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(BridgekitStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `ptr` must be null or point to a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(name: &str, ptr: *const c_char) -> Result<&'a str, BridgekitStatus> {
    if ptr.is_null() {
        return Err(fail(
            BridgekitStatus::NullArgument,
            format!("{name} is null"),
        ));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        fail(
            BridgekitStatus::InvalidUtf8,
            format!("{name} is not valid UTF-8"),
        )
    })
}

/// # Safety
/// `out` must be a valid pointer to write one `char *` through.
unsafe fn emit_string(out: *mut *mut c_char, value: String) -> BridgekitStatus {
    match CString::new(value) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            BridgekitStatus::Ok
        }
        Err(_) => fail(BridgekitStatus::Panic, "output contained a NUL byte"),
    }
}

/// # Safety
/// `out` must be a valid pointer to write one `char *` through.
unsafe fn emit_json<T: serde::Serialize>(out: *mut *mut c_char, value: &T) -> BridgekitStatus {
    match to_canonical_json(value) {
        Ok(json) => unsafe { emit_string(out, json) },
        Err(err) => fail(
            BridgekitStatus::Panic,
            format!("serialization failed: {err}"),
        ),
    }
}

fn pipeline_status(err: &PipelineError) -> BridgekitStatus {
    match err {
        PipelineError::Bundle(_) => BridgekitStatus::InvalidBundle,
        PipelineError::Tally(_) | PipelineError::MissingTally => BridgekitStatus::TallyFailed,
        PipelineError::Completion(CompletionError::InvalidConfig(_))
        | PipelineError::Bridging(BridgingError::InvalidConfig(_)) => {
            BridgekitStatus::InvalidConfig
        }
        PipelineError::Io { .. } | PipelineError::MalformedArtifact { .. } => {
            BridgekitStatus::IoFailed
        }
        _ => BridgekitStatus::PipelineFailed,
    }
}

/// The library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bridgekit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Describes the current thread's most recent failure.
///
/// The returned pointer stays valid until the next failing call on this
/// thread. The string is empty when nothing has failed yet; it is only
/// meaningful after a call returned a non-`Ok` status.
#[no_mangle]
pub extern "C" fn bridgekit_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Loads and validates the bundle directory at `dir` into a new handle
/// written to `out`. Bundles with integrity violations are refused; use
/// [`bridgekit_validate`] to inspect the violations of a suspect directory.
///
/// # Safety
/// `dir` must be a valid NUL-terminated string and `out` a valid pointer.
/// The handle written to `out` must be released with
/// [`bridgekit_bundle_free`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_bundle_load(
    dir: *const c_char,
    out: *mut *mut BridgekitBundle,
) -> BridgekitStatus {
    guarded(|| {
        if out.is_null() {
            return fail(BridgekitStatus::NullArgument, "out is null");
        }
        let dir = match unsafe { utf8_arg("dir", dir) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match load_bundle(Path::new(dir)) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(BridgekitBundle { inner })) };
                BridgekitStatus::Ok
            }
            Err(err) => fail(BridgekitStatus::InvalidBundle, err.to_string()),
        }
    })
}

/// Reads the bundle directory at `dir` without refusing violations and
/// writes its validation report to `out` as JSON: an object whose
/// `violations` array is empty exactly when the bundle is clean.
///
/// # Safety
/// `dir` must be a valid NUL-terminated string and `out` a valid pointer.
/// The string written to `out` must be released with
/// [`bridgekit_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_validate(
    dir: *const c_char,
    out: *mut *mut c_char,
) -> BridgekitStatus {
    guarded(|| {
        if out.is_null() {
            return fail(BridgekitStatus::NullArgument, "out is null");
        }
        let dir = match unsafe { utf8_arg("dir", dir) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match read_bundle(Path::new(dir)) {
            Ok(bundle) => unsafe { emit_json(out, &validate_bundle(&bundle)) },
            Err(err) => fail(BridgekitStatus::InvalidBundle, err.to_string()),
        }
    })
}

/// Number of participants in the bundle; 0 when `bundle` is null.
///
/// # Safety
/// `bundle` must be null or a live handle from [`bridgekit_bundle_load`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_bundle_participant_count(
    bundle: *const BridgekitBundle,
) -> usize {
    if bundle.is_null() {
        0
    } else {
        unsafe { &*bundle }.inner.participants.len()
    }
}

/// Number of statements in the bundle; 0 when `bundle` is null.
///
/// # Safety
/// `bundle` must be null or a live handle from [`bridgekit_bundle_load`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_bundle_statement_count(
    bundle: *const BridgekitBundle,
) -> usize {
    if bundle.is_null() {
        0
    } else {
        unsafe { &*bundle }.inner.statements.len()
    }
}

/// Number of groups in the bundle's partition; 0 when `bundle` is null.
///
/// # Safety
/// `bundle` must be null or a live handle from [`bridgekit_bundle_load`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_bundle_group_count(bundle: *const BridgekitBundle) -> usize {
    if bundle.is_null() {
        0
    } else {
        unsafe { &*bundle }.inner.partition.groups.len()
    }
}

/// Whether the bundle carries final votes; false when `bundle` is null.
///
/// # Safety
/// `bundle` must be null or a live handle from [`bridgekit_bundle_load`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_bundle_has_final_votes(
    bundle: *const BridgekitBundle,
) -> bool {
    if bundle.is_null() {
        false
    } else {
        unsafe { &*bundle }.inner.final_votes.is_some()
    }
}

/// Runs the full pipeline described by `config_json` (the same document the
/// CLI accepts via `--config`) and writes the run report to `out` as JSON.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out` a valid
/// pointer. The string written to `out` must be released with
/// [`bridgekit_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_run(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> BridgekitStatus {
    guarded(|| {
        if out.is_null() {
            return fail(BridgekitStatus::NullArgument, "out is null");
        }
        let text = match unsafe { utf8_arg("config_json", config_json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let config: PipelineConfig = match serde_json::from_str(text) {
            Ok(config) => config,
            Err(err) => return fail(BridgekitStatus::InvalidConfig, format!("config: {err}")),
        };
        match run_pipeline(&config) {
            Ok(report) => unsafe { emit_json(out, &report) },
            Err(err) => fail(pipeline_status(&err), err.to_string()),
        }
    })
}

/// Tallies the bundle's final votes and writes the result to `out` as JSON.
///
/// `statements_json` is an optional JSON array of statement ids giving the
/// tally universe; ballots are projected onto it. Pass null to use every
/// statement appearing in the rank ballots.
///
/// # Safety
/// `bundle` must be a live handle from [`bridgekit_bundle_load`],
/// `statements_json` null or a valid NUL-terminated string, and `out` a
/// valid pointer. The string written to `out` must be released with
/// [`bridgekit_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_tally(
    bundle: *const BridgekitBundle,
    statements_json: *const c_char,
    out: *mut *mut c_char,
) -> BridgekitStatus {
    guarded(|| {
        if bundle.is_null() {
            return fail(BridgekitStatus::NullArgument, "bundle is null");
        }
        if out.is_null() {
            return fail(BridgekitStatus::NullArgument, "out is null");
        }
        let bundle = unsafe { &*bundle };
        let Some(final_votes) = bundle.inner.final_votes.as_ref() else {
            return fail(
                BridgekitStatus::TallyFailed,
                "bundle has no final votes to tally",
            );
        };
        let statements: Vec<StatementId> = if statements_json.is_null() {
            final_votes
                .rankings
                .iter()
                .flat_map(|ballot| ballot.ranking.iter().cloned())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        } else {
            let text = match unsafe { utf8_arg("statements_json", statements_json) } {
                Ok(s) => s,
                Err(status) => return status,
            };
            match serde_json::from_str(text) {
                Ok(ids) => ids,
                Err(err) => {
                    return fail(BridgekitStatus::InvalidConfig, format!("statements: {err}"))
                }
            }
        };
        match stage_tally(&bundle.inner, final_votes, &statements) {
            Ok(result) => unsafe { emit_json(out, &result) },
            Err(err) => fail(pipeline_status(&err), err.to_string()),
        }
    })
}

/// Generates a synthetic dialogue bundle into `out_dir`, writing the bundle
/// files plus `manifest.json` describing the planted statement classes.
///
/// `spec_json` optionally overrides the default generation parameters; pass
/// null for the defaults. When `out_manifest` is non-null, the manifest is
/// also written to it as JSON.
///
/// # Safety
/// `out_dir` must be a valid NUL-terminated string; `spec_json` null or a
/// valid NUL-terminated string; `out_manifest` null or a valid pointer. A
/// string written to `out_manifest` must be released with
/// [`bridgekit_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bridgekit_synth(
    spec_json: *const c_char,
    out_dir: *const c_char,
    out_manifest: *mut *mut c_char,
) -> BridgekitStatus {
    guarded(|| {
        let dir = match unsafe { utf8_arg("out_dir", out_dir) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let spec: SyntheticSpec = if spec_json.is_null() {
            SyntheticSpec::default()
        } else {
            let text = match unsafe { utf8_arg("spec_json", spec_json) } {
                Ok(s) => s,
                Err(status) => return status,
            };
            match serde_json::from_str(text) {
                Ok(spec) => spec,
                Err(err) => return fail(BridgekitStatus::InvalidConfig, format!("spec: {err}")),
            }
        };
        let (bundle, manifest) = match generate_synthetic_dialogue(&spec) {
            Ok(pair) => pair,
            Err(err) => return fail(BridgekitStatus::InvalidConfig, err.to_string()),
        };
        let dir = Path::new(dir);
        if let Err(err) = save_bundle(&bundle, dir) {
            return fail(BridgekitStatus::IoFailed, err.to_string());
        }
        let manifest_path = dir.join(MANIFEST_FILE);
        if let Err(err) = write_canonical_json(&manifest_path, &manifest) {
            return fail(
                BridgekitStatus::IoFailed,
                format!("{}: {err}", manifest_path.display()),
            );
        }
        if out_manifest.is_null() {
            BridgekitStatus::Ok
        } else {
            unsafe { emit_json(out_manifest, &manifest) }
        }
    })
}

/// Releases a bundle handle. Null is ignored.
///
/// # Safety
/// `bundle` must be null or a handle from [`bridgekit_bundle_load`] that has
/// not been freed already.
#[no_mangle]
pub unsafe extern "C" fn bridgekit_bundle_free(bundle: *mut BridgekitBundle) {
    if !bundle.is_null() {
        drop(unsafe { Box::from_raw(bundle) });
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string this library returned that has not been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn bridgekit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
