//! C interface to the dioph-lab core.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a [`DlStatus`];
//! the message of the last failure on the calling thread is available from
//! [`dl_last_error`]. Strings are copied into caller buffers: a call with a
//! too small buffer returns `DL_STATUS_BUFFER_TOO_SMALL` and stores the
//! required size (including the terminating NUL) in `needed`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dioph_lab::engine::EngineConfig;
use dioph_lab::exponents;
use dioph_lab::lab;
use dioph_lab::synth::{self, SynthConfig, SynthResult};
use dioph_lab::Error;
use rug::Integer;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DlStatus {
    Ok = 0,
    NullArgument = 1,
    /// Invalid parameters (lambda outside the window, k = 0, bad target text).
    Domain = 2,
    /// Working precision hit its cap or an exact tie was met.
    Precision = 3,
    /// A construction or check failed.
    Failed = 4,
    /// I/O error or corrupt input.
    Io = 5,
    BufferTooSmall = 6,
    IndexOutOfRange = 7,
    Utf8 = 8,
    Panic = 9,
}

/// A finished synthesis run.
pub struct DlSynthesis {
    result: SynthResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DlStatus {
    set_error(&e.to_string());
    match e.exit_code() {
        2 => DlStatus::Domain,
        3 => DlStatus::Precision,
        5 => DlStatus::Io,
        _ => DlStatus::Failed,
    }
}

fn guard(f: impl FnOnce() -> DlStatus) -> DlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            DlStatus::Panic
        }
    }
}

/// Copy `s` with a terminating NUL into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null; `needed` must be valid or null.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> DlStatus {
    let need = s.len() + 1;
    if !needed.is_null() {
        *needed = need;
    }
    if buf.is_null() || len < need {
        set_error(&format!("buffer of {len} bytes, need {need}"));
        return DlStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    DlStatus::Ok
}

/// # Safety
/// `s` must be a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, DlStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(DlStatus::NullArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        DlStatus::Utf8
    })
}

/// Version of the core library as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dl_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Copy the message of the last failure on this thread into `buf`.
/// Returns `DL_STATUS_OK` with an empty string when there was none.
///
/// # Safety
/// `buf` must be valid for `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn dl_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> DlStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().as_ref().map(|c| c.to_string_lossy().into_owned()));
    copy_out(msg.as_deref().unwrap_or(""), buf, len, needed)
}

/// The root `g_k(lambda)` as a double.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_root_gk(k: u32, lambda: f64, out: *mut f64) -> DlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DlStatus::NullArgument;
        }
        let lam = exponents::real(exponents::DEFAULT_PREC, lambda);
        if let Err(e) = exponents::check_lambda(&lam) {
            return status_of(&e);
        }
        match exponents::root_gk(k, &lam, exponents::DEFAULT_TOL) {
            Ok(r) => {
                *out = r.value.to_f64();
                DlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Run a synthesis. On success `*out` receives a handle to free with
/// [`dl_synthesis_free`]; on failure it is set to null.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_synthesize(
    lambda: f64,
    k: u32,
    steps: usize,
    q1: u64,
    out: *mut *mut DlSynthesis,
) -> DlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DlStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let cfg = SynthConfig { lambda, k, steps, q1, ..SynthConfig::default() };
        match synth::run(&cfg) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(DlSynthesis { result }));
                DlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release a synthesis handle; null is ignored.
///
/// # Safety
/// `s` must come from [`dl_synthesize`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dl_synthesis_free(s: *mut DlSynthesis) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of vectors in the run, 0 for null.
///
/// # Safety
/// `s` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dl_synthesis_len(s: *const DlSynthesis) -> usize {
    s.as_ref().map_or(0, |s| s.result.vectors.len())
}

/// Coordinate `coord` (0 is the denominator `q`) of vector `index` (0-based) as a decimal string.
///
/// # Safety
/// `s` must be a live handle; `buf` valid for `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn dl_synthesis_coordinate(
    s: *const DlSynthesis,
    index: usize,
    coord: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> DlStatus {
    guard(|| {
        let Some(s) = s.as_ref() else {
            set_error("null handle");
            return DlStatus::NullArgument;
        };
        match s.result.vectors.get(index).and_then(|v| v.coords().get(coord)) {
            Some(x) => copy_out(&x.to_string(), buf, len, needed),
            None => {
                set_error(&format!("no coordinate ({index}, {coord})"));
                DlStatus::IndexOutOfRange
            }
        }
    })
}

/// The realized pattern word, e.g. `"BABA..."`; empty when the run is too short.
///
/// # Safety
/// `s` must be a live handle; `buf` valid for `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn dl_synthesis_word(
    s: *const DlSynthesis,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> DlStatus {
    guard(|| {
        let Some(s) = s.as_ref() else {
            set_error("null handle");
            return DlStatus::NullArgument;
        };
        let w = s.result.realized_word.as_ref().map(|w| w.to_string()).unwrap_or_default();
        copy_out(&w, buf, len, needed)
    })
}

/// 1 when every exact condition held, 0 otherwise or for null.
///
/// # Safety
/// `s` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dl_synthesis_exact_ok(s: *const DlSynthesis) -> i32 {
    s.as_ref().map_or(0, |s| s.result.conditions.exact_hold() as i32)
}

/// Run the engine on the constructed point and compare the first `n` vectors.
/// `*matched` receives the number of leading vectors found as consecutive records.
///
/// # Safety
/// `s` must be a live handle; `matched` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_synthesis_round_trip(s: *const DlSynthesis, n: usize, matched: *mut usize) -> DlStatus {
    guard(|| {
        let Some(s) = s.as_ref() else {
            set_error("null handle");
            return DlStatus::NullArgument;
        };
        if matched.is_null() {
            set_error("null output pointer");
            return DlStatus::NullArgument;
        }
        let r = &s.result;
        match lab::round_trip(r.alpha().enclosure(), &r.vectors, n, &EngineConfig::default()) {
            Ok(t) => {
                *matched = t.matched;
                DlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Analyze a target (same syntax as the command line) up to `q_max`, given
/// as a decimal string. On success `*json` holds a report to free with
/// [`dl_string_free`].
///
/// # Safety
/// `target` and `q_max` must be NUL-terminated strings; `json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_analyze_json(target: *const c_char, q_max: *const c_char, json: *mut *mut c_char) -> DlStatus {
    guard(|| {
        if json.is_null() {
            set_error("null output pointer");
            return DlStatus::NullArgument;
        }
        *json = ptr::null_mut();
        let (target, q_max) = match (read_str(target), read_str(q_max)) {
            (Ok(t), Ok(q)) => (t, q),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let Ok(q_max) = q_max.trim().parse::<Integer>() else {
            set_error("q_max is not an integer");
            return DlStatus::Domain;
        };
        let report = match lab::analyze(target, &q_max, &EngineConfig::default()) {
            Ok(r) => r,
            Err(e) => return status_of(&e),
        };
        let text = match serde_json::to_string(&report) {
            Ok(t) => t,
            Err(e) => {
                set_error(&e.to_string());
                return DlStatus::Failed;
            }
        };
        match CString::new(text) {
            Ok(c) => {
                *json = c.into_raw();
                DlStatus::Ok
            }
            Err(_) => {
                set_error("report contains a NUL byte");
                DlStatus::Failed
            }
        }
    })
}

/// Release a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
