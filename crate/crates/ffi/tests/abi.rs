use std::ffi::{c_char, CStr, CString};
use std::ptr;
use symboleo::fixtures;
use symboleo_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a returned string.
unsafe fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    sym_string_free(p);
    s
}

fn last_error() -> (String, String) {
    unsafe {
        (
            CStr::from_ptr(sym_last_error_message()).to_string_lossy().into_owned(),
            CStr::from_ptr(sym_last_error_code()).to_string_lossy().into_owned(),
        )
    }
}

fn parse_te() -> *mut SymSpec {
    let mut spec = ptr::null_mut();
    let src = c(fixtures::TE_SPEC);
    assert_eq!(unsafe { sym_spec_parse(src.as_ptr(), &mut spec) }, SymStatus::Ok);
    assert!(sym_last_error_message().is_null());
    spec
}

#[test]
fn parse_print_and_generate() {
    let spec = parse_te();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(sym_spec_print(spec, &mut out), SymStatus::Ok);
        assert_eq!(take(out), fixtures::TE_SPEC);

        assert_eq!(sym_generate_bundle_json(spec, &mut out), SymStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["contract"], "TransactiveEnergy");
        assert!(v["files"]["contract.js"].is_string());
        assert_eq!(v["loc"]["total"], symboleo::codegen::generate(&symboleo::lang::check(fixtures::TE_SPEC).0.unwrap()).loc());
        sym_spec_free(spec);
    }
}

#[test]
fn invalid_source_reports_diagnostics() {
    let mut spec = ptr::null_mut();
    let src = c("Domain endDomain Contract C() Declarations endDeclarations Obligations o: Obligation(a, b, true, true); endObligations Powers endPowers endContract");
    unsafe {
        assert_eq!(sym_spec_parse(src.as_ptr(), &mut spec), SymStatus::Diagnostics);
        assert!(spec.is_null());
        let diags: Vec<symboleo::diagnostic::Diagnostic> =
            serde_json::from_str(CStr::from_ptr(sym_last_error_diagnostics()).to_str().unwrap()).unwrap();
        assert!(!diags.is_empty());
        assert_eq!(last_error().1, diags[0].code);

        let mut out = ptr::null_mut();
        assert_eq!(sym_spec_validate(src.as_ptr(), &mut out), SymStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["valid"], false);
    }
}

#[test]
fn null_and_bad_arguments() {
    unsafe {
        let mut spec = ptr::null_mut();
        assert_eq!(sym_spec_parse(ptr::null(), &mut spec), SymStatus::NullPointer);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(sym_spec_parse(bad.as_ptr().cast(), &mut spec), SymStatus::InvalidUtf8);
        let mut out = ptr::null_mut();
        assert_eq!(sym_spec_print(ptr::null(), &mut out), SymStatus::NullPointer);

        let spec = parse_te();
        let params = c(fixtures::TE_PARAMS);
        let mut inst = ptr::null_mut();
        assert_eq!(sym_instance_new(spec, params.as_ptr(), c("soon").as_ptr(), &mut inst), SymStatus::InvalidArgument);
        assert_eq!(sym_instance_new(spec, c("[1]").as_ptr(), c("2024-01-01").as_ptr(), &mut inst), SymStatus::InvalidArgument);
        // missing parameter values
        assert_eq!(sym_instance_new(spec, ptr::null(), c("2024-01-01").as_ptr(), &mut inst), SymStatus::Diagnostics);
        assert_eq!(last_error().1, "E801");
        assert!(inst.is_null());
        sym_spec_free(spec);
        sym_spec_free(ptr::null_mut());
        sym_instance_free(ptr::null_mut());
        sym_string_free(ptr::null_mut());
    }
}

#[test]
fn instance_lifecycle() {
    let spec = parse_te();
    unsafe {
        let params = c(fixtures::TE_PARAMS);
        let mut inst = ptr::null_mut();
        assert_eq!(sym_instance_new(spec, params.as_ptr(), c("2024-01-01").as_ptr(), &mut inst), SymStatus::Ok);
        // the handle owns everything it needs
        sym_spec_free(spec);

        let mut out = ptr::null_mut();
        let attrs = c(r#"{"quantity":100,"voltage":260,"location":"Substation 7"}"#);
        assert_eq!(
            sym_instance_submit_event(inst, c("evt_dispatch_energy").as_ptr(), c("2024-02-10T09:30").as_ptr(), attrs.as_ptr(), &mut out),
            SymStatus::Ok
        );
        let report: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert!(report["transitions"].as_array().unwrap().iter().any(|t| t["entity"] == "P_terminate" && t["to"] == "InEffect"));

        assert_eq!(sym_instance_tick(inst, c("2024-01-01").as_ptr(), &mut out), SymStatus::RuntimeError);
        assert_eq!(last_error().1, "E802");
        assert_eq!(sym_instance_exert(inst, c("P_nothing").as_ptr(), &mut out), SymStatus::RuntimeError);
        assert_eq!(last_error().1, "E806");

        assert_eq!(sym_instance_exert(inst, c("P_terminate").as_ptr(), &mut out), SymStatus::Ok);
        take(out);
        assert_eq!(sym_instance_status(inst, &mut out), SymStatus::Ok);
        let status: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(status["contract"], "Terminated");
        assert_eq!(status["events_recorded"], 1);
        sym_instance_free(inst);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/symboleo.h");
    for f in [
        "sym_spec_parse",
        "sym_spec_free",
        "sym_spec_validate",
        "sym_spec_print",
        "sym_generate_bundle_json",
        "sym_instance_new",
        "sym_instance_submit_event",
        "sym_instance_tick",
        "sym_instance_exert",
        "sym_instance_status",
        "sym_instance_free",
        "sym_string_free",
        "sym_last_error_message",
        "sym_last_error_diagnostics",
        "sym_last_error_code",
    ] {
        assert!(header.contains(&format!(" {f}(")) || header.contains(&format!("*{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct SymSpec SymSpec;"));
    assert!(header.contains("SYM_STATUS_PANIC = 6"));
}
