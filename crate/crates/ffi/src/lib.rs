//! C ABI over `ers-core`.
//!
//! Laws and traces cross the boundary as opaque handles owned by the caller
//! and released with the matching `*_free` function. Every fallible call
//! returns an [`ErsStatus`]; the message of the last failure on the calling
//! thread is available from [`ers_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use ers_core::compensate::{residual_radius, GainSplit};
use ers_core::dynamics::{integrate_scalar, ErsConfig};
use ers_core::scenario::{run_scenario, ConfigFile, RunTrace, SettlingReport};
use ers_core::settle::{law_settling_time, tightest_bound, EstimateKind, FormulaId, SettlingEstimate};
use ers_core::{AttractingLaw, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed text, bad parameter or argument outside a function's domain.
    InvalidArgument = 2,
    Unsupported = 3,
    Numeric = 4,
    Divergence = 5,
    IllConditioned = 6,
    Structural = 7,
    Io = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
    OutOfRange = 10,
}

impl From<&Error> for ErsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parameter { .. } | Error::Config(_) => ErsStatus::InvalidArgument,
            Error::Unsupported(_) => ErsStatus::Unsupported,
            Error::Numeric(_) => ErsStatus::Numeric,
            Error::Divergence { .. } => ErsStatus::Divergence,
            Error::IllConditioned { .. } => ErsStatus::IllConditioned,
            Error::Structural(_) => ErsStatus::Structural,
            Error::Io(_) => ErsStatus::Io,
        }
    }
}

/// Opaque attracting law.
pub struct ErsLaw(AttractingLaw);

/// Opaque simulation result: a trace plus its settling report.
pub struct ErsTrace {
    times: Vec<f64>,
    /// Row-major, `width` values per sample.
    errors: Vec<f64>,
    width: usize,
    report: Option<SettlingReport>,
}

/// Settling-time estimate. `formula` indexes the label table read through
/// [`ers_formula_label`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErsEstimate {
    /// 0 for an exact time, 1 for an upper bound.
    pub kind: u32,
    pub time: f64,
    pub formula: u32,
}

impl From<&SettlingEstimate> for ErsEstimate {
    fn from(e: &SettlingEstimate) -> Self {
        ErsEstimate {
            kind: match e.kind {
                EstimateKind::Exact => 0,
                EstimateKind::UpperBound => 1,
            },
            time: e.time,
            formula: FormulaId::ALL.iter().position(|f| *f == e.formula_id).unwrap_or(0) as u32,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), ErsStatus>) -> ErsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ErsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("panic inside ers-core".into());
            ErsStatus::Internal
        }
    }
}

fn fail(e: Error) -> ErsStatus {
    let status = ErsStatus::from(&e);
    set_last_error(e.to_string());
    status
}

fn null(what: &str) -> ErsStatus {
    set_last_error(format!("{what} is null"));
    ErsStatus::NullPointer
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, ErsStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_last_error(format!("{what} is not UTF-8"));
        ErsStatus::InvalidArgument
    })
}

unsafe fn law_ref<'a>(law: *const ErsLaw) -> Result<&'a AttractingLaw, ErsStatus> {
    law.as_ref().map(|l| &l.0).ok_or_else(|| null("law"))
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn ers_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ers_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Label of formula `index`, or null when out of range. The string is static.
#[no_mangle]
pub extern "C" fn ers_formula_label(index: u32) -> *const c_char {
    static LABELS: OnceLock<Vec<CString>> = OnceLock::new();
    let labels = LABELS.get_or_init(|| {
        FormulaId::ALL
            .iter()
            .map(|f| CString::new(f.label()).expect("labels have no NUL"))
            .collect()
    });
    labels.get(index as usize).map_or(ptr::null(), |c| c.as_ptr())
}

/// Parse a law from a TOML inline table such as
/// `{ type = "SPRL", kappa = 1.0, gamma = 0.5 }` and validate it.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ers_law_parse(source: *const c_char, out: *mut *mut ErsLaw) -> ErsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let source = text(source, "source")?;
        #[derive(serde::Deserialize)]
        struct Wrap {
            law: AttractingLaw,
        }
        let w: Wrap =
            toml::from_str(&format!("law = {}", source.trim())).map_err(|e| fail(Error::Config(e.to_string())))?;
        w.law.validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(ErsLaw(w.law)));
        Ok(())
    })
}

/// # Safety
/// `law` must be null or a handle from [`ers_law_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ers_law_free(law: *mut ErsLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// Rectifying action `r(e)`.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ers_law_rectify(law: *const ErsLaw, e: f64, out: *mut f64) -> ErsStatus {
    guard(|| {
        let law = law_ref(law)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = law.rectify(e);
        Ok(())
    })
}

/// Exact settling time from `|e0|`. Returns `Unsupported` for laws with
/// bounds only.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ers_settling_time(law: *const ErsLaw, e0: f64, out: *mut ErsEstimate) -> ErsStatus {
    guard(|| {
        let law = law_ref(law)?;
        if out.is_null() {
            return Err(null("out"));
        }
        match law_settling_time(law, e0).map_err(fail)? {
            Some(est) => {
                *out = ErsEstimate::from(&est);
                Ok(())
            }
            None => Err(fail(Error::Unsupported(format!(
                "{} has no exact settling time",
                law.name()
            )))),
        }
    })
}

/// Tightest uniform settling bound over all initial errors.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ers_settling_bound(law: *const ErsLaw, out: *mut ErsEstimate) -> ErsStatus {
    guard(|| {
        let law = law_ref(law)?;
        if out.is_null() {
            return Err(null("out"));
        }
        match tightest_bound(law).map_err(fail)? {
            Some(est) => {
                *out = ErsEstimate::from(&est);
                Ok(())
            }
            None => Err(fail(Error::Unsupported(format!("{} has no uniform bound", law.name())))),
        }
    })
}

/// Residual radius under smooth compensation with width `epsilon`, gains
/// split in half.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ers_residual_radius(law: *const ErsLaw, epsilon: f64, out: *mut f64) -> ErsStatus {
    guard(|| {
        let law = law_ref(law)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = residual_radius(law, epsilon, &GainSplit::half(law)).map_err(fail)?;
        Ok(())
    })
}

/// Integrate the undisturbed scalar error dynamics from `e0`.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ers_simulate_scalar(
    law: *const ErsLaw,
    e0: f64,
    dt: f64,
    horizon: f64,
    out: *mut *mut ErsTrace,
) -> ErsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let law = *law_ref(law)?;
        let cfg = ErsConfig {
            dt,
            ..ErsConfig::new(law, horizon)
        };
        let trace = integrate_scalar(&cfg, e0).map_err(fail)?;
        *out = Box::into_raw(Box::new(ErsTrace {
            times: trace.times,
            errors: trace.errors,
            width: 1,
            report: None,
        }));
        Ok(())
    })
}

/// Run the first `[[scenario]]` of a TOML config document.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ers_run_scenario(config: *const c_char, out: *mut *mut ErsTrace) -> ErsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = ConfigFile::parse(text(config, "config")?).map_err(fail)?;
        let scenario = cfg
            .scenario
            .first()
            .ok_or_else(|| fail(Error::Config("config has no scenario".into())))?;
        let outcome = run_scenario(scenario).map_err(fail)?;
        let trace = match outcome.trace {
            RunTrace::Scalar(t) => ErsTrace {
                times: t.times,
                errors: t.errors,
                width: 1,
                report: Some(outcome.report),
            },
            RunTrace::Qp(t) => ErsTrace {
                width: t.k,
                times: t.times,
                errors: t.e,
                report: Some(outcome.report),
            },
        };
        *out = Box::into_raw(Box::new(trace));
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ers_trace_free(trace: *mut ErsTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ers_trace_len(trace: *const ErsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.times.len())
}

/// Error components per sample; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ers_trace_width(trace: *const ErsTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.width)
}

/// Time and error components of sample `index`. `errors` must hold
/// [`ers_trace_width`] values.
///
/// # Safety
/// `trace` must be a live handle, `time` writable, and `errors` writable for
/// `ers_trace_width(trace)` doubles.
#[no_mangle]
pub unsafe extern "C" fn ers_trace_sample(
    trace: *const ErsTrace,
    index: usize,
    time: *mut f64,
    errors: *mut f64,
) -> ErsStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        if time.is_null() || errors.is_null() {
            return Err(null("output buffer"));
        }
        if index >= t.times.len() {
            set_last_error(format!("sample {index} out of range (len {})", t.times.len()));
            return Err(ErsStatus::OutOfRange);
        }
        *time = t.times[index];
        let row = &t.errors[index * t.width..(index + 1) * t.width];
        ptr::copy_nonoverlapping(row.as_ptr(), errors, t.width);
        Ok(())
    })
}

/// First time after which every sample has `‖e‖∞ ≤ tol`, or a negative value
/// when the trace never settles.
///
/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ers_trace_settling_time(trace: *const ErsTrace, tol: f64) -> f64 {
    let Some(t) = trace.as_ref() else {
        return -1.0;
    };
    let mags = t.errors.chunks(t.width).map(ers_core::linalg::norm_inf);
    ers_core::dynamics::settling_index(mags, tol).map_or(-1.0, |i| t.times[i])
}

/// Settling report of a scenario run as JSON; null for plain scalar runs.
/// Free with [`ers_string_free`].
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ers_trace_report_json(trace: *const ErsTrace) -> *mut c_char {
    trace
        .as_ref()
        .and_then(|t| t.report.as_ref())
        .and_then(|r| serde_json::to_string(r).ok())
        .and_then(|s| CString::new(s).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ers_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
