//! C ABI over `dri-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns a
//! [`DriStatus`] and, on failure, leaves a message retrievable through
//! [`dri_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dri_core::{DriConfig, Error, Instance, Solution};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInstance = 4,
    InvalidConfig = 5,
    BudgetExhausted = 6,
    Solver = 7,
    Io = 8,
    Panic = 9,
}

/// A parsed VRPTW instance.
pub struct DriInstance {
    inner: Instance,
}

/// A solved route plan together with its run report.
pub struct DriSolution {
    solution: Solution,
    report: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(error: &Error) -> DriStatus {
    match error.root() {
        Error::Parse { .. } | Error::Json(_) | Error::Toml(_) | Error::Csv(_) => DriStatus::Parse,
        Error::InvalidInstance(_) => DriStatus::InvalidInstance,
        Error::InvalidConfig(_) => DriStatus::InvalidConfig,
        Error::BudgetExhausted { .. } => DriStatus::BudgetExhausted,
        Error::Solver { .. } => DriStatus::Solver,
        Error::Io(_) | Error::File { .. } => DriStatus::Io,
        Error::Stage { .. } => unreachable!("root strips stage labels"),
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DriStatus, String)>) -> DriStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DriStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {message}"));
            DriStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DriStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DriStatus, String) {
    (DriStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DriStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DriStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Parses an instance in the benchmark text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dri_instance_parse(text: *const c_char, out: *mut *mut DriInstance) -> DriStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(text, "text")?;
        let inner = dri_core::parse_instance(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(DriInstance { inner }));
        Ok(())
    })
}

/// Reads and parses an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dri_instance_load(path: *const c_char, out: *mut *mut DriInstance) -> DriStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = read_str(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| (DriStatus::Io, format!("{path}: {e}")))?;
        let inner = dri_core::parse_instance(&text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(DriInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from `dri_instance_parse` or `dri_instance_load`, or be null.
#[no_mangle]
pub unsafe extern "C" fn dri_instance_free(instance: *mut DriInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of customers, or 0 for a null handle.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dri_instance_customer_count(instance: *const DriInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.num_customers())
}

/// Runs the full pipeline. `config_json` may be null for the defaults;
/// otherwise it is a JSON object with any subset of the run settings.
///
/// # Safety
/// `instance` must be a live handle, `config_json` null or NUL-terminated,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dri_run(
    instance: *const DriInstance,
    config_json: *const c_char,
    out: *mut *mut DriSolution,
) -> DriStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let instance = instance.as_ref().ok_or_else(|| null("instance"))?;
        let config = if config_json.is_null() {
            DriConfig::default()
        } else {
            let text = read_str(config_json, "config_json")?;
            serde_json::from_str::<DriConfig>(text).map_err(|e| (DriStatus::InvalidConfig, e.to_string()))?
        };
        config.validate().map_err(lib_err)?;
        let outcome = dri_core::run_dri(&instance.inner, &config).map_err(lib_err)?;
        let report = outcome.report.to_json().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(DriSolution {
            solution: outcome.solution,
            report,
        }));
        Ok(())
    })
}

/// Total travel cost, or NaN for a null handle.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dri_solution_total_cost(solution: *const DriSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.solution.total_cost)
}

/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dri_solution_route_count(solution: *const DriSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.route_count())
}

/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dri_solution_is_feasible(solution: *const DriSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.solution.is_feasible())
}

/// Solution document as JSON; free the string with `dri_string_free`.
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dri_solution_to_json(solution: *const DriSolution, out: *mut *mut c_char) -> DriStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        *out = to_c_string(s.solution.to_json().map_err(lib_err)?);
        Ok(())
    })
}

/// Run report as JSON; free the string with `dri_string_free`.
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dri_solution_report_json(solution: *const DriSolution, out: *mut *mut c_char) -> DriStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        *out = to_c_string(s.report.clone());
        Ok(())
    })
}

/// # Safety
/// `solution` must come from `dri_run`, or be null.
#[no_mangle]
pub unsafe extern "C" fn dri_solution_free(solution: *mut DriSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn dri_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn dri_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dri_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
