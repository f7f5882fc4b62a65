//! C ABI for rgspec.
//!
//! Specs and reports are opaque handles created and freed through this
//! interface. Every function returns an [`RgStatus`]; on anything other than
//! `RG_STATUS_OK` or `RG_STATUS_CHECK_FAILED`, [`rg_last_error`] describes
//! the problem. Panics never cross the boundary: they become
//! `RG_STATUS_INTERNAL`.
//!
//! Strings passed in must be NUL-terminated UTF-8. Strings returned by
//! `rg_report_json` and `rg_last_error` are borrowed and stay valid until
//! the owning report is freed or the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde_json::{json, Value as Json};

use rgspec::checker::{
    verify_system, verify_to_json, Outcome, Strategy, VerifyError, VerifyOptions, REPORT_SCHEMA_VERSION,
};
use rgspec::diagram::{parse_diagram, to_dot, validate_diagram};
use rgspec::dsl::{parse, parse_expr};
use rgspec::implies::{Implication, ImpliesError, DEFAULT_ENUMERATION_CAP};
use rgspec::model::{check_complementarity, check_layer_monotonicity, Atomicity, ModelError, Monotonicity, SystemSpec};
use rgspec::runtime::RuntimeError;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RgStatus {
    Ok = 0,
    /// The call worked and the check it ran failed; a report is still returned.
    CheckFailed = 1,
    ParseError = 2,
    InvalidArgument = 3,
    /// An enumeration or exploration bound was reached before a verdict.
    CapExceeded = 4,
    Internal = 5,
}

/// A parsed, validated system specification.
pub struct RgSystem {
    spec: SystemSpec,
}

/// A finished check: verdict plus its JSON report.
pub struct RgReport {
    passed: bool,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(RgStatus, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Failure {
        Failure(RgStatus::InvalidArgument, msg.into())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Failure {
        let status = match e {
            ModelError::Implies(ImpliesError::CapExceeded { .. }) => RgStatus::CapExceeded,
            ModelError::UnknownProcess(_) | ModelError::UnknownLayer { .. } => RgStatus::InvalidArgument,
            _ => RgStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Failure {
        let status = match e {
            VerifyError::Runtime(RuntimeError::CapExceeded { .. }) => RgStatus::CapExceeded,
            VerifyError::InitViolated(_) | VerifyError::Runtime(_) => RgStatus::InvalidArgument,
            VerifyError::Check(_) => RgStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status and the last-error string.
fn guard(f: impl FnOnce() -> Result<RgStatus, Failure>) -> RgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            if s == RgStatus::Ok {
                set_error("");
            }
            s
        }
        Ok(Err(Failure(s, msg))) => {
            set_error(msg);
            s
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            RgStatus::Internal
        }
    }
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::invalid(format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::invalid(format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

fn out_ptr<T>(out: *mut *mut T) -> Result<&'static mut *mut T, Failure> {
    if out.is_null() {
        return Err(Failure::invalid("output pointer is null"));
    }
    // SAFETY: non-null and, per the API contract, writable.
    let slot = unsafe { &mut *out };
    *slot = ptr::null_mut();
    Ok(slot)
}

fn system<'a>(sys: *const RgSystem) -> Result<&'a RgSystem, Failure> {
    // SAFETY: per the API contract, non-null handles come from rg_system_parse.
    unsafe { sys.as_ref() }.ok_or_else(|| Failure::invalid("system handle is null"))
}

fn finish(report: RgReport, out: &mut *mut RgReport) -> RgStatus {
    let status = if report.passed { RgStatus::Ok } else { RgStatus::CheckFailed };
    *out = Box::into_raw(Box::new(report));
    status
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Never null.
#[no_mangle]
pub extern "C" fn rg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses and validates a `.rg` specification.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rg_system_parse(source: *const c_char, out: *mut *mut RgSystem) -> RgStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let src = text(source, "source")?;
        let tree = parse(src, "<ffi>").map_err(|errs| {
            let msg = errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n");
            Failure(RgStatus::ParseError, msg)
        })?;
        if !tree.diagnostics.is_empty() {
            let msg = tree.diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n");
            return Err(Failure(RgStatus::ParseError, msg));
        }
        *out = Box::into_raw(Box::new(RgSystem { spec: tree.spec }));
        Ok(RgStatus::Ok)
    })
}

/// Frees a system. Null is ignored.
///
/// # Safety
/// `sys` must be null or a handle from `rg_system_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_system_free(sys: *mut RgSystem) {
    if !sys.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sys))));
    }
}

/// Number of processes in the system, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_system_process_count(sys: *const RgSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.spec.processes.len())
}

/// Overrides every injector budget.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_system_set_budget(sys: *mut RgSystem, budget: u32) -> RgStatus {
    guard(|| {
        let s = sys.as_mut().ok_or_else(|| Failure::invalid("system handle is null"))?;
        s.spec = s.spec.clone().with_budget(budget);
        Ok(RgStatus::Ok)
    })
}

/// Overrides the atomicity: 0 for statement, 1 for block.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_system_set_atomicity(sys: *mut RgSystem, block: i32) -> RgStatus {
    guard(|| {
        let s = sys.as_mut().ok_or_else(|| Failure::invalid("system handle is null"))?;
        s.spec.atomicity = match block {
            0 => Atomicity::Statement,
            1 => Atomicity::Block,
            other => return Err(Failure::invalid(format!("atomicity must be 0 or 1, got {other}"))),
        };
        Ok(RgStatus::Ok)
    })
}

fn verify(
    sys: &RgSystem,
    filter: Option<&str>,
    strategy: Strategy,
    out: &mut *mut RgReport,
) -> Result<RgStatus, Failure> {
    let spec = &sys.spec;
    let filter = match filter {
        Some(src) => Some(parse_expr(src, &spec.decl).map_err(|e| Failure(RgStatus::ParseError, e.to_string()))?),
        None => None,
    };
    let init = spec.initial_states(filter.as_ref()).map_err(|e| Failure::invalid(e.to_string()))?;
    if init.is_empty() {
        return Err(Failure::invalid("no initial state satisfies the init constraint and filter"));
    }
    let r = verify_system(spec, &strategy, &init, VerifyOptions::default())?;
    let report = RgReport {
        passed: r.outcome == Outcome::Pass,
        json: CString::new(verify_to_json(&r, spec).to_string()).unwrap_or_default(),
    };
    if r.outcome == Outcome::Incomplete {
        *out = Box::into_raw(Box::new(report));
        set_error("exploration stopped at the node cap before a verdict");
        return Ok(RgStatus::CapExceeded);
    }
    Ok(finish(report, out))
}

/// Explores every interleaving up to `depth` steps from each initial state
/// satisfying `filter` (null for all).
///
/// # Safety
/// `sys` must be a live handle, `filter` null or a NUL-terminated string,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_verify_exhaustive(
    sys: *const RgSystem,
    filter: *const c_char,
    depth: usize,
    out: *mut *mut RgReport,
) -> RgStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = system(sys)?;
        let filter = optional_text(filter, "filter")?;
        if depth == 0 {
            return Err(Failure::invalid("depth must be positive"));
        }
        verify(s, filter, Strategy::Exhaustive { depth }, out)
    })
}

/// Runs `runs` seeded random schedules per initial state.
///
/// # Safety
/// As for `rg_verify_exhaustive`.
#[no_mangle]
pub unsafe extern "C" fn rg_verify_random(
    sys: *const RgSystem,
    filter: *const c_char,
    runs: usize,
    seed: u64,
    weight: f64,
    step_cap: usize,
    out: *mut *mut RgReport,
) -> RgStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = system(sys)?;
        let filter = optional_text(filter, "filter")?;
        if runs == 0 || step_cap == 0 {
            return Err(Failure::invalid("runs and step_cap must be positive"));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Failure::invalid(format!("weight {weight} is outside [0, 1]")));
        }
        verify(s, filter, Strategy::Random { runs, seed, weight, step_cap }, out)
    })
}

/// Checks that each layer's rely is implied by its environment's guarantees.
///
/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_check_complementarity(sys: *const RgSystem, out: *mut *mut RgReport) -> RgStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = system(sys)?;
        let rows = check_complementarity(&s.spec, DEFAULT_ENUMERATION_CAP)?;
        let items: Vec<Json> = rows
            .iter()
            .map(|r| {
                let result = if matches!(r.result, Implication::Holds { .. }) { "HOLDS" } else { "FAILS" };
                json!({ "process": r.process, "layer": r.layer, "name": r.layer_name, "result": result })
            })
            .collect();
        let passed = rows.iter().all(|r| r.result.holds());
        Ok(finish(static_report("complement", passed, items), out))
    })
}

/// Checks that each process's relies weaken from one layer to the next.
///
/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_check_layers(sys: *const RgSystem, out: *mut *mut RgReport) -> RgStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = system(sys)?;
        let mut items = Vec::new();
        let mut passed = true;
        for p in &s.spec.processes {
            let m = check_layer_monotonicity(p, &s.spec.decl, DEFAULT_ENUMERATION_CAP)?;
            passed &= m == Monotonicity::Holds;
            let result = if m == Monotonicity::Holds { "HOLDS" } else { "FAILS" };
            items.push(json!({ "process": p.id, "result": result }));
        }
        Ok(finish(static_report("layers", passed, items), out))
    })
}

fn static_report(kind: &str, passed: bool, items: Vec<Json>) -> RgReport {
    let v = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": kind,
        "verdict": if passed { "PASS" } else { "FAIL" },
        "results": items,
    });
    RgReport { passed, json: CString::new(v.to_string()).unwrap_or_default() }
}

/// 1 when the check passed, 0 when it failed or the handle is null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_report_passed(report: *const RgReport) -> i32 {
    report.as_ref().map_or(0, |r| i32::from(r.passed))
}

/// JSON text of the report, owned by the report. Null for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_report_json(report: *const RgReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// Frees a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a live handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_report_free(report: *mut RgReport) {
    if !report.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(report))));
    }
}

/// Validates a `.pf` diagram and renders it as DOT. The string is freed
/// with `rg_string_free`.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_diagram_to_dot(source: *const c_char, out: *mut *mut c_char) -> RgStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let src = text(source, "source")?;
        let d = parse_diagram(src).map_err(|e| Failure(RgStatus::ParseError, e.to_string()))?;
        let problems = validate_diagram(&d);
        if !problems.is_empty() {
            let msg = problems.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("\n");
            return Err(Failure(RgStatus::CheckFailed, msg));
        }
        let dot = to_dot(&d).map_err(|e| Failure(RgStatus::Internal, e.to_string()))?;
        *out = CString::new(dot).map_err(|e| Failure(RgStatus::Internal, e.to_string()))?.into_raw();
        Ok(RgStatus::Ok)
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from `rg_diagram_to_dot` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
