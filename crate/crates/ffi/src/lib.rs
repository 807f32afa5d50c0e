//! C ABI over `iet-lab`.
//!
//! Every fallible call returns an [`IetLabStatus`]; on failure the message
//! is kept per thread and read with [`iet_lab_last_error`]. Numbers cross
//! the boundary as exact strings such as `"-1/2 + 1/2*sqrt(5)"`. Strings
//! handed out by this library are released with [`iet_lab_string_free`],
//! handles with their matching `_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::c_char;

use iet_lab::catalog;
use iet_lab::experiments::{run_campaign, ExperimentConfig};
use iet_lab::iet::{IdocOutcome, Iet};
use iet_lab::io;
use iet_lab::skew::{birkhoff_sum, visit_count, SkewState, Window};
use iet_lab::step::StepFunction;
use iet_lab::ExactScalar;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IetLabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    Computation = 5,
    Panic = 6,
}

/// Opaque interval exchange.
pub struct IetLabIet {
    inner: Iet,
}

/// Opaque mean-zero step function.
pub struct IetLabStep {
    inner: StepFunction,
}

struct Failure(IetLabStatus, String);

impl Failure {
    fn parse(e: impl std::fmt::Display) -> Self {
        Failure(IetLabStatus::Parse, e.to_string())
    }

    fn input(e: impl std::fmt::Display) -> Self {
        Failure(IetLabStatus::InvalidInput, e.to_string())
    }

    fn compute(e: impl std::fmt::Display) -> Self {
        Failure(IetLabStatus::Computation, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> IetLabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            IetLabStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            IetLabStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(IetLabStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(IetLabStatus::InvalidUtf8, e.to_string()))
}

unsafe fn scalar(p: *const c_char) -> Result<ExactScalar, Failure> {
    text(p)?.parse().map_err(Failure::parse)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(IetLabStatus::NullPointer, "null handle".into()))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(IetLabStatus::NullPointer, "null output pointer".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(Failure::compute)?;
    put(out, c.into_raw())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// is valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn iet_lab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn iet_lab_version() -> *const c_char {
    concat!("iet-lab ", env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an exchange from `{"permutation":[...],"lengths":[...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_iet_from_json(json: *const c_char, out: *mut *mut IetLabIet) -> IetLabStatus {
    guard(|| {
        let inner = io::iet_from_json(text(json)?).map_err(Failure::input)?;
        put(out, Box::into_raw(Box::new(IetLabIet { inner })))
    })
}

/// Catalog exchange by name: `golden`, `third`, `three` or `four`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_iet_preset(name: *const c_char, out: *mut *mut IetLabIet) -> IetLabStatus {
    guard(|| {
        let name = text(name)?;
        let inner = catalog::by_name(name).ok_or_else(|| Failure::input(format!("unknown preset {name:?}")))?;
        put(out, Box::into_raw(Box::new(IetLabIet { inner })))
    })
}

/// # Safety
/// `iet` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_iet_free(iet: *mut IetLabIet) {
    if !iet.is_null() {
        drop(Box::from_raw(iet));
    }
}

/// Number of exchanged intervals, or 0 for a null handle.
///
/// # Safety
/// `iet` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_iet_interval_count(iet: *const IetLabIet) -> usize {
    iet.as_ref().map_or(0, |h| h.inner.interval_count())
}

/// # Safety
/// `iet` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_iet_to_json(iet: *const IetLabIet, out: *mut *mut c_char) -> IetLabStatus {
    guard(|| put_string(out, io::iet_to_json(&handle(iet)?.inner)))
}

/// `T x` as an exact string.
///
/// # Safety
/// `iet` must be a live handle, `x` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_iet_apply(
    iet: *const IetLabIet,
    x: *const c_char,
    out: *mut *mut c_char,
) -> IetLabStatus {
    guard(|| {
        let y = handle(iet)?.inner.evaluate(&scalar(x)?).map_err(Failure::input)?;
        put_string(out, y.to_string())
    })
}

/// Checks the infinite distinct orbits condition up to `depth`. Writes 0
/// to `fails_at` when no connection was found, otherwise the first `n`
/// with `T^n β_i = β_j`.
///
/// # Safety
/// `iet` must be a live handle and `fails_at` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_iet_check_idoc(
    iet: *const IetLabIet,
    depth: u64,
    fails_at: *mut u64,
) -> IetLabStatus {
    guard(|| {
        let n = match handle(iet)?.inner.check_idoc(depth).map_err(Failure::input)? {
            IdocOutcome::PassedToDepth(_) => 0,
            IdocOutcome::FailsAt { n, .. } => n,
        };
        put(fails_at, n)
    })
}

/// Builds a step function from `{"widths":[...],"values":[...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_step_from_json(json: *const c_char, out: *mut *mut IetLabStep) -> IetLabStatus {
    guard(|| {
        let inner = io::step_from_json(text(json)?).map_err(Failure::input)?;
        put(out, Box::into_raw(Box::new(IetLabStep { inner })))
    })
}

/// # Safety
/// `step` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_step_free(step: *mut IetLabStep) {
    if !step.is_null() {
        drop(Box::from_raw(step));
    }
}

/// # Safety
/// `step` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_step_to_json(step: *const IetLabStep, out: *mut *mut c_char) -> IetLabStatus {
    guard(|| put_string(out, io::step_to_json(&handle(step)?.inner)))
}

/// Moves discontinuity `i` (one-based) by `zeta` and restores mean zero.
/// The result is a new handle.
///
/// # Safety
/// `step` must be a live handle, `zeta` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_step_nudge(
    step: *const IetLabStep,
    i: usize,
    zeta: *const c_char,
    out: *mut *mut IetLabStep,
) -> IetLabStatus {
    guard(|| {
        if i == 0 {
            return Err(Failure::input("discontinuity index is one-based"));
        }
        let inner = handle(step)?.inner.nudge(i - 1, &scalar(zeta)?).map_err(Failure::input)?;
        put(out, Box::into_raw(Box::new(IetLabStep { inner })))
    })
}

/// `S_n f(x) = f(x) + … + f(T^{n−1} x)` as an exact string.
///
/// # Safety
/// Handles must be live, `x` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_birkhoff_sum(
    iet: *const IetLabIet,
    step: *const IetLabStep,
    x: *const c_char,
    n: usize,
    out: *mut *mut c_char,
) -> IetLabStatus {
    guard(|| {
        let sums = birkhoff_sum(&handle(iet)?.inner, &handle(step)?.inner, &scalar(x)?, n).map_err(Failure::input)?;
        put_string(out, sums[n].to_string())
    })
}

/// Number of `0 ≤ m < n` with `t + S_m f(x) ∈ [−B, B]`.
///
/// # Safety
/// Handles must be live, the strings NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_visit_count(
    iet: *const IetLabIet,
    step: *const IetLabStep,
    x: *const c_char,
    t: *const c_char,
    b: *const c_char,
    n: u64,
    out: *mut u64,
) -> IetLabStatus {
    guard(|| {
        let start = SkewState::new(scalar(x)?, scalar(t)?).map_err(Failure::input)?;
        let window = Window::new(scalar(b)?).map_err(Failure::input)?;
        put(out, visit_count(&handle(iet)?.inner, &handle(step)?.inner, &start, &window, n))
    })
}

/// Runs every experiment of a TOML campaign config and writes the full
/// report as JSON. `passed` receives 1 when every check passed, else 0.
/// Nothing is written to disk.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn iet_lab_run_campaign(
    config: *const c_char,
    out: *mut *mut c_char,
    passed: *mut i32,
) -> IetLabStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_toml(text(config)?).map_err(Failure::parse)?;
        let report = run_campaign(&cfg).map_err(Failure::compute)?;
        put(passed, report.passed() as i32)?;
        put_string(out, report.to_json())
    })
}
