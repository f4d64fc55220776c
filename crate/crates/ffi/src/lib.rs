//! C ABI over the symboleo toolchain.
//!
//! Handles (`SymSpec`, `SymInstance`) are opaque and owned by the caller,
//! who releases them with the matching `_free` function. Strings returned
//! through `char **out` parameters are UTF-8 JSON or spec text and must be
//! released with [`sym_string_free`].
//!
//! Every fallible function returns a [`SymStatus`]. On anything other than
//! `SYM_STATUS_OK`, [`sym_last_error_message`] describes the failure and
//! [`sym_last_error_diagnostics`] returns the diagnostics as a JSON array.
//! Both are per thread and stay valid until the next call on that thread.
//! Handles are not thread-safe; do not use one from two threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use symboleo::diagnostic::Diagnostic;
use symboleo::lang::{self, SymboleoSpec};
use symboleo::runtime::{self, ContractInstance, TransitionReport};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input has errors; see the last diagnostics.
    Diagnostics = 3,
    /// An argument was malformed (bad JSON, bad timestamp).
    InvalidArgument = 4,
    /// The contract instance rejected the operation.
    RuntimeError = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// A parsed, validated specification.
pub struct SymSpec {
    spec: SymboleoSpec,
}

/// A running contract instance.
pub struct SymInstance {
    instance: ContractInstance,
}

struct LastError {
    message: CString,
    diagnostics: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn cstring(s: String) -> CString {
    CString::new(s).unwrap_or_else(|e| {
        let mut v = e.into_vec();
        v.retain(|b| *b != 0);
        CString::new(v).expect("nul bytes removed")
    })
}

fn set_error(message: impl Into<String>, diagnostics: &[Diagnostic]) {
    let diagnostics = serde_json::to_string(diagnostics).unwrap_or_else(|_| "[]".into());
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = Some(LastError {
            message: cstring(message.into()),
            diagnostics: cstring(diagnostics),
        })
    });
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(SymStatus);

type FfiResult<T> = Result<T, Fail>;

fn fail(status: SymStatus, message: impl Into<String>) -> Fail {
    set_error(message, &[]);
    Fail(status)
}

fn diagnostics(status: SymStatus, diags: Vec<Diagnostic>) -> Fail {
    let message = diags
        .iter()
        .find(|d| d.is_error())
        .or(diags.first())
        .map(|d| d.to_string())
        .unwrap_or_else(|| "operation failed".into());
    set_error(message, &diags);
    Fail(status)
}

/// Runs `f`, converting panics and failures into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> SymStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SymStatus::Ok,
        Ok(Err(Fail(s))) => s,
        Err(_) => {
            set_error("internal panic", &[]);
            SymStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(fail(SymStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SymStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| fail(SymStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| fail(SymStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    *out = cstring(s).into_raw();
}

fn check_out<T>(out: *mut *mut T) -> FfiResult<()> {
    if out.is_null() {
        Err(fail(SymStatus::NullPointer, "`out` is null"))
    } else {
        Ok(())
    }
}

fn json_object(text: Option<&str>, name: &str) -> FfiResult<serde_json::Map<String, serde_json::Value>> {
    match text {
        None => Ok(Default::default()),
        Some(t) => serde_json::from_str(t)
            .map_err(|e| fail(SymStatus::InvalidArgument, format!("`{name}` is not a JSON object: {e}"))),
    }
}

fn time_arg(text: &str) -> FfiResult<chrono::NaiveDateTime> {
    runtime::parse_time(text)
        .ok_or_else(|| fail(SymStatus::InvalidArgument, format!("invalid timestamp `{text}`")))
}

fn report_json(r: Result<TransitionReport, Vec<Diagnostic>>) -> FfiResult<String> {
    let r = r.map_err(|d| diagnostics(SymStatus::RuntimeError, d))?;
    Ok(serde_json::to_string(&r).expect("serializable"))
}

/// Parses and validates `source`. On success stores a new handle in `*out`;
/// on `SYM_STATUS_DIAGNOSTICS` leaves `*out` untouched.
///
/// # Safety
/// `source` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_spec_parse(source: *const c_char, out: *mut *mut SymSpec) -> SymStatus {
    guard(|| {
        let source = str_arg(source, "source")?;
        check_out(out)?;
        let (spec, diags) = lang::check(source);
        let spec = spec.ok_or_else(|| diagnostics(SymStatus::Diagnostics, diags))?;
        put(out, SymSpec { spec });
        Ok(())
    })
}

/// Releases a spec handle. Null is ignored.
///
/// # Safety
/// `spec` must come from [`sym_spec_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sym_spec_free(spec: *mut SymSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Writes `{"valid": bool, "diagnostics": [...]}` for `source` to `*out`.
/// Returns `SYM_STATUS_OK` even when the source is invalid.
///
/// # Safety
/// `source` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_spec_validate(source: *const c_char, out: *mut *mut c_char) -> SymStatus {
    guard(|| {
        let source = str_arg(source, "source")?;
        check_out(out)?;
        let v = symboleo::service::ops::validate(source);
        put_string(out, serde_json::to_string(&v).expect("serializable"));
        Ok(())
    })
}

/// Writes the canonical text of `spec` to `*out`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_spec_print(spec: *const SymSpec, out: *mut *mut c_char) -> SymStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        check_out(out)?;
        put_string(out, lang::print(&spec.spec));
        Ok(())
    })
}

/// Writes the generated bundle as JSON (`contract`, `generator`, `files`,
/// `loc`) to `*out`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_generate_bundle_json(spec: *const SymSpec, out: *mut *mut c_char) -> SymStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        check_out(out)?;
        let (_, outcome) = symboleo::service::ops::generate(&spec.spec);
        put_string(out, serde_json::to_string(&outcome).expect("serializable"));
        Ok(())
    })
}

/// Starts an instance of `spec`. `params_json` is a JSON object of
/// parameter values (null means none); `start` is `YYYY-MM-DD[THH:MM]`.
///
/// # Safety
/// Pointers must be null or valid as documented; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_instance_new(
    spec: *const SymSpec,
    params_json: *const c_char,
    start: *const c_char,
    out: *mut *mut SymInstance,
) -> SymStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let params = json_object(opt_str_arg(params_json, "params_json")?, "params_json")?;
        let start = time_arg(str_arg(start, "start")?)?;
        check_out(out)?;
        let instance = runtime::instantiate(&spec.spec, &params, start)
            .map_err(|d| diagnostics(SymStatus::Diagnostics, d))?;
        put(out, SymInstance { instance });
        Ok(())
    })
}

/// Releases an instance handle. Null is ignored.
///
/// # Safety
/// `instance` must come from [`sym_instance_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sym_instance_free(instance: *mut SymInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Records an event occurrence and writes the transition report to `*out`.
/// `attributes_json` may be null for events without attributes.
///
/// # Safety
/// Pointers must be null or valid as documented; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_instance_submit_event(
    instance: *mut SymInstance,
    event: *const c_char,
    at: *const c_char,
    attributes_json: *const c_char,
    out: *mut *mut c_char,
) -> SymStatus {
    guard(|| {
        let inst = handle_mut(instance, "instance")?;
        let event = str_arg(event, "event")?;
        let at = time_arg(str_arg(at, "at")?)?;
        let attrs = json_object(opt_str_arg(attributes_json, "attributes_json")?, "attributes_json")?;
        check_out(out)?;
        let report = report_json(inst.instance.submit_event(event, at, &attrs))?;
        put_string(out, report);
        Ok(())
    })
}

/// Advances the clock and writes the transition report to `*out`.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_instance_tick(
    instance: *mut SymInstance,
    at: *const c_char,
    out: *mut *mut c_char,
) -> SymStatus {
    guard(|| {
        let inst = handle_mut(instance, "instance")?;
        let at = time_arg(str_arg(at, "at")?)?;
        check_out(out)?;
        let report = report_json(inst.instance.tick(at))?;
        put_string(out, report);
        Ok(())
    })
}

/// Exercises a power and writes the transition report to `*out`.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_instance_exert(
    instance: *mut SymInstance,
    power: *const c_char,
    out: *mut *mut c_char,
) -> SymStatus {
    guard(|| {
        let inst = handle_mut(instance, "instance")?;
        let power = str_arg(power, "power")?;
        check_out(out)?;
        let report = report_json(inst.instance.exert(power))?;
        put_string(out, report);
        Ok(())
    })
}

/// Writes the status snapshot of an instance as JSON to `*out`.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sym_instance_status(instance: *const SymInstance, out: *mut *mut c_char) -> SymStatus {
    guard(|| {
        let inst = handle(instance, "instance")?;
        check_out(out)?;
        put_string(out, serde_json::to_string(&inst.instance.status()).expect("serializable"));
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sym_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null if the last call
/// succeeded. Owned by the library.
#[no_mangle]
pub extern "C" fn sym_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.message.as_ptr()))
}

/// Diagnostics for the last failure on this thread as a JSON array, or null
/// if the last call succeeded. Owned by the library.
#[no_mangle]
pub extern "C" fn sym_last_error_diagnostics() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.diagnostics.as_ptr()))
}

/// Code of the first diagnostic in the last failure, e.g. `"E804"`, or null.
/// Owned by the library; valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn sym_last_error_code() -> *const c_char {
    thread_local! {
        static CODE: RefCell<Option<CString>> = const { RefCell::new(None) };
    }
    let code = LAST_ERROR.with(|e| {
        let e = e.borrow();
        let e = e.as_ref()?;
        let diags: Vec<Diagnostic> = serde_json::from_str(e.diagnostics.to_str().ok()?).ok()?;
        diags.first().map(|d| d.code.clone())
    });
    CODE.with(|c| {
        let mut c = c.borrow_mut();
        *c = code.map(cstring);
        c.as_ref().map_or(ptr::null(), |s| s.as_ptr())
    })
}
