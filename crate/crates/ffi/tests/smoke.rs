//! Exercises the C ABI end to end from Rust: synthesis, loading, validation,
//! a full pipeline run, tallying, and the error paths.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use bridgekit_ffi::{
    bridgekit_bundle_free, bridgekit_bundle_group_count, bridgekit_bundle_has_final_votes,
    bridgekit_bundle_load, bridgekit_bundle_participant_count, bridgekit_bundle_statement_count,
    bridgekit_last_error, bridgekit_run, bridgekit_string_free, bridgekit_synth, bridgekit_tally,
    bridgekit_validate, bridgekit_version, BridgekitBundle, BridgekitStatus,
};

fn cstring(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn path_cstring(p: &Path) -> CString {
    cstring(p.to_str().unwrap())
}

/// Copies and frees an ABI-owned string.
unsafe fn take_string(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null(), "expected an output string");
    let s = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_owned();
    unsafe { bridgekit_string_free(ptr) };
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bridgekit_last_error()) }
        .to_str()
        .unwrap()
        .to_owned()
}

#[test]
fn version_is_a_static_semver_string() {
    let version = unsafe { CStr::from_ptr(bridgekit_version()) }.to_str().unwrap();
    assert!(version.split('.').count() >= 3, "unexpected version {version}");
}

#[test]
fn full_round_trip_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let bundle_dir = dir.path().join("bundle");
    let out_dir = dir.path().join("out");

    let spec = cstring(
        r#"{"group_sizes":[6,5,4],"bridging_count":3,"divisive_count":3,"filler_count":3,"sparsity":1.0,"seed":7}"#,
    );
    let mut manifest_ptr: *mut c_char = ptr::null_mut();
    let status = unsafe {
        bridgekit_synth(
            spec.as_ptr(),
            path_cstring(&bundle_dir).as_ptr(),
            &mut manifest_ptr,
        )
    };
    assert_eq!(status, BridgekitStatus::Ok, "synth failed: {}", last_error());
    let manifest: serde_json::Value =
        serde_json::from_str(&unsafe { take_string(manifest_ptr) }).unwrap();
    assert_eq!(manifest["classes"].as_object().unwrap().len(), 9);
    assert!(bundle_dir.join("manifest.json").is_file());

    let mut report_ptr: *mut c_char = ptr::null_mut();
    let status =
        unsafe { bridgekit_validate(path_cstring(&bundle_dir).as_ptr(), &mut report_ptr) };
    assert_eq!(status, BridgekitStatus::Ok);
    let report: serde_json::Value =
        serde_json::from_str(&unsafe { take_string(report_ptr) }).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);

    let mut handle: *mut BridgekitBundle = ptr::null_mut();
    let status = unsafe { bridgekit_bundle_load(path_cstring(&bundle_dir).as_ptr(), &mut handle) };
    assert_eq!(status, BridgekitStatus::Ok, "load failed: {}", last_error());
    unsafe {
        assert_eq!(bridgekit_bundle_participant_count(handle), 15);
        assert_eq!(bridgekit_bundle_statement_count(handle), 9);
        assert_eq!(bridgekit_bundle_group_count(handle), 3);
        assert!(bridgekit_bundle_has_final_votes(handle));
    }

    let config = cstring(&format!(
        r#"{{"bundle_dir":{},"out_dir":{},"seed":7,"auto_approve":true}}"#,
        serde_json::to_string(bundle_dir.to_str().unwrap()).unwrap(),
        serde_json::to_string(out_dir.to_str().unwrap()).unwrap(),
    ));
    let mut run_ptr: *mut c_char = ptr::null_mut();
    let status = unsafe { bridgekit_run(config.as_ptr(), &mut run_ptr) };
    assert_eq!(status, BridgekitStatus::Ok, "run failed: {}", last_error());
    let run_report: serde_json::Value =
        serde_json::from_str(&unsafe { take_string(run_ptr) }).unwrap();
    assert_eq!(run_report["status"], "complete");
    assert!(run_report["tally"].is_object());

    let mut tally_ptr: *mut c_char = ptr::null_mut();
    let status = unsafe { bridgekit_tally(handle, ptr::null(), &mut tally_ptr) };
    assert_eq!(status, BridgekitStatus::Ok, "tally failed: {}", last_error());
    let tally: serde_json::Value =
        serde_json::from_str(&unsafe { take_string(tally_ptr) }).unwrap();
    let statements = tally["statements"].as_array().unwrap();
    assert!(!statements.is_empty());
    assert_eq!(
        tally["elimination_order"].as_array().unwrap().len(),
        statements.len()
    );

    unsafe { bridgekit_bundle_free(handle) };
}

#[test]
fn error_paths_set_status_and_message() {
    let mut handle: *mut BridgekitBundle = ptr::null_mut();
    let missing = cstring("/nonexistent/bridgekit-bundle");
    let status = unsafe { bridgekit_bundle_load(missing.as_ptr(), &mut handle) };
    assert_eq!(status, BridgekitStatus::InvalidBundle);
    assert!(!last_error().is_empty());
    assert!(handle.is_null());

    let status = unsafe { bridgekit_bundle_load(ptr::null(), &mut handle) };
    assert_eq!(status, BridgekitStatus::NullArgument);
    let status = unsafe { bridgekit_bundle_load(missing.as_ptr(), ptr::null_mut()) };
    assert_eq!(status, BridgekitStatus::NullArgument);

    let bad_utf8: [c_char; 2] = [-1, 0];
    let status = unsafe { bridgekit_bundle_load(bad_utf8.as_ptr(), &mut handle) };
    assert_eq!(status, BridgekitStatus::InvalidUtf8);

    let bad_config = cstring("{not json");
    let mut out: *mut c_char = ptr::null_mut();
    let status = unsafe { bridgekit_run(bad_config.as_ptr(), &mut out) };
    assert_eq!(status, BridgekitStatus::InvalidConfig);
    assert!(last_error().starts_with("config:"));

    let bad_spec = cstring(r#"{"group_sizes":[]}"#);
    let dir = tempfile::tempdir().unwrap();
    let status = unsafe {
        bridgekit_synth(
            bad_spec.as_ptr(),
            path_cstring(dir.path()).as_ptr(),
            ptr::null_mut(),
        )
    };
    assert_eq!(status, BridgekitStatus::InvalidConfig);

    unsafe {
        bridgekit_bundle_free(ptr::null_mut());
        bridgekit_string_free(ptr::null_mut());
    }
}

#[test]
fn tallying_without_final_votes_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let spec = cstring(
        r#"{"group_sizes":[3,2,2],"bridging_count":2,"divisive_count":2,"filler_count":2,"sparsity":1.0,"include_final_votes":false,"seed":3}"#,
    );
    let status = unsafe {
        bridgekit_synth(spec.as_ptr(), path_cstring(dir.path()).as_ptr(), ptr::null_mut())
    };
    assert_eq!(status, BridgekitStatus::Ok, "synth failed: {}", last_error());

    let mut handle: *mut BridgekitBundle = ptr::null_mut();
    let status = unsafe { bridgekit_bundle_load(path_cstring(dir.path()).as_ptr(), &mut handle) };
    assert_eq!(status, BridgekitStatus::Ok, "load failed: {}", last_error());
    assert!(!unsafe { bridgekit_bundle_has_final_votes(handle) });

    let mut out: *mut c_char = ptr::null_mut();
    let status = unsafe { bridgekit_tally(handle, ptr::null(), &mut out) };
    assert_eq!(status, BridgekitStatus::TallyFailed);
    assert!(last_error().contains("final votes"));

    unsafe { bridgekit_bundle_free(handle) };
}

#[test]
fn generated_header_covers_the_surface() {
    let header_path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("bridgekit.h");
    let header = std::fs::read_to_string(&header_path).unwrap();
    for needle in [
        "BridgekitStatus",
        "BridgekitBundle",
        "bridgekit_bundle_load",
        "bridgekit_validate",
        "bridgekit_run",
        "bridgekit_tally",
        "bridgekit_synth",
        "bridgekit_bundle_free",
        "bridgekit_string_free",
        "bridgekit_last_error",
        "bridgekit_version",
    ] {
        assert!(header.contains(needle), "header lacks {needle}");
    }
}
