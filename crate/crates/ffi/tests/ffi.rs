//! Calls through the C interface, from Rust and from a C program.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use nrcprov_ffi::*;

const TYPES: &str = r#"{"R": "{(A: int, B: int)}"}"#;
const DATA: &str = r#"{"R": {"bag": [{"A": 1, "B": 1}, {"A": 1, "B": 2}, {"A": 2, "B": 3}]}}"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn compile(source: &str) -> Result<*mut NrcQuery, (NrcStatus, String)> {
    let mut q = ptr::null_mut();
    let status = unsafe { nrc_query_compile(c(source).as_ptr(), c(TYPES).as_ptr(), &mut q) };
    if status == NrcStatus::Ok {
        Ok(q)
    } else {
        Err((status, last_error()))
    }
}

fn last_error() -> String {
    let p = nrc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

/// Takes ownership of a returned string.
fn take(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { nrc_string_free(p) };
    s
}

#[test]
fn compile_eval_track_and_analyze() {
    let q = compile("sum({ x.A | x <- R })").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(nrc_query_type(q, &mut out), NrcStatus::Ok);
        assert_eq!(take(out), "int");
        assert_eq!(nrc_query_eval(q, c(DATA).as_ptr(), &mut out), NrcStatus::Ok);
        assert_eq!(take(out), "4");
        assert_eq!(
            nrc_query_track(q, ptr::null(), c(DATA).as_ptr(), &mut out),
            NrcStatus::Ok
        );
        let tracked: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(tracked["w"], 4);
        assert_eq!(
            tracked["ann"],
            serde_json::json!(["R", "R[0]", "R[0].A", "R[1]", "R[1].A", "R[2]", "R[2].A"])
        );
        assert_eq!(nrc_query_analyze(q, ptr::null(), &mut out), NrcStatus::Ok);
        let t: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(t["ann"], serde_json::json!(["R", "R.elem", "R.elem.A"]));
        nrc_query_free(q);
    }
}

#[test]
fn bundles_cross_the_boundary() {
    let q = compile("{ x | x <- R, x.A == x.B }").unwrap();
    let actx = c(r#"{"R": "{(A: int^{a}, B: int^{b})}"}"#);
    let mut out = ptr::null_mut();
    unsafe {
        let status = nrc_query_bundle(q, ptr::null(), c(DATA).as_ptr(), actx.as_ptr(), &mut out);
        assert_eq!(status, NrcStatus::Ok, "{}", last_error());
        let bundle = nrcprov::bundle::SliceBundle::from_json(&take(out)).unwrap();
        bundle.validate().unwrap();
        assert_eq!(
            bundle.analysis.unwrap().atype_text,
            "{(A: int^{a}, B: int^{b})}^{a,b}"
        );
        nrc_query_free(q);
    }
}

#[test]
fn errors_are_reported_by_status_and_message() {
    assert_eq!(compile("1 +").unwrap_err().0, NrcStatus::Syntax);
    let (status, message) = compile("1 + true").unwrap_err();
    assert_eq!(status, NrcStatus::Type);
    assert!(message.contains("type error"), "{message}");

    let q = compile("R").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(nrc_query_eval(q, c("{").as_ptr(), &mut out), NrcStatus::Data);
        assert_eq!(
            nrc_query_eval(q, c(r#"{"R": 1}"#).as_ptr(), &mut out),
            NrcStatus::Data
        );
        assert_eq!(nrc_query_eval(q, ptr::null(), &mut out), NrcStatus::NullArgument);
        assert_eq!(
            nrc_query_eval(ptr::null(), c(DATA).as_ptr(), &mut out),
            NrcStatus::NullArgument
        );
        assert_eq!(nrc_query_type(q, ptr::null_mut()), NrcStatus::NullArgument);
        let bad = [0xffu8, 0];
        assert_eq!(
            nrc_query_eval(q, bad.as_ptr().cast(), &mut out),
            NrcStatus::InvalidUtf8
        );
        assert_eq!(nrc_query_type(q, &mut out), NrcStatus::Ok);
        assert!(nrc_last_error().is_null());
        nrc_string_free(out);
        nrc_query_free(q);
        nrc_query_free(ptr::null_mut());
        nrc_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(nrc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"#include <stdio.h>
#include <string.h>
#include "nrcprov.h"

int main(void) {
    NrcQuery *q = NULL;
    char *out = NULL;
    if (nrc_query_compile("count(R)", "{\"R\": \"{int}\"}", &q) != NRC_STATUS_OK) return 1;
    if (nrc_query_eval(q, "{\"R\": {\"bag\": [1, 1, 2]}}", &out) != NRC_STATUS_OK) return 2;
    int ok = strcmp(out, "3") == 0;
    nrc_string_free(out);
    if (nrc_query_eval(q, "{", &out) != NRC_STATUS_DATA || nrc_last_error() == NULL) return 3;
    nrc_query_free(q);
    puts("ok");
    return ok ? 0 : 4;
}
"#;

#[test]
fn a_c_program_links_and_runs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(dir.join("include/nrcprov.h")).unwrap();
    for name in [
        "nrc_query_compile",
        "nrc_query_bundle",
        "nrc_string_free",
        "NRC_STATUS_PANIC",
    ] {
        assert!(text.contains(name), "{name} missing from the header");
    }
    // Test binaries live in target/<profile>/deps and the static library
    // one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(Path::parent).unwrap();
    assert!(
        lib_dir.join("libnrcprov_ffi.a").exists(),
        "static library not built"
    );

    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    let bin = tmp.path().join("use");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg("-L")
        .arg(lib_dir)
        .args(["-l:libnrcprov_ffi.a", "-lpthread", "-ldl", "-lm"])
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(run.stdout, b"ok\n");
}
