//! C ABI over the solver suite.
//!
//! Conventions: every function that can fail returns [`HobStatus`] and
//! records a human-readable message retrievable through [`hob_last_error`]
//! on the same thread. Configs are opaque heap handles owned by the caller
//! and released with [`hob_config_free`]. All strings are NUL-terminated
//! UTF-8. Panics never cross the boundary; they surface as
//! `HOB_STATUS_PANIC`.

use hob::config::{Mode, RunConfig};
use hob::constitutive::{stress_closure, stress_derived, MaterialParams, ShearPair};
use hob::execute::execute;
use hob::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe, UnwindSafe};
use std::path::Path;
use std::str::FromStr;

/// Outcome of an API call. Zero is success; everything else indicates the
/// category of failure and leaves detail in the per-thread error message.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HobStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration text could not be parsed.
    ParseError = 3,
    /// The configuration parsed but violates a documented range.
    InvalidConfig = 4,
    /// An argument (e.g. a mode name) is outside the documented set.
    InvalidArgument = 5,
    /// The solver left the finite range or exhausted the analyticity band.
    Blowup = 6,
    /// A run completed but breached a hard monitor ceiling.
    MonitorViolation = 7,
    /// Reading or writing run artifacts failed.
    IoError = 8,
    /// Any other runtime failure.
    RuntimeError = 9,
    /// A panic was caught at the boundary; state may be inconsistent.
    Panic = 10,
}

/// Opaque run-configuration handle.
pub struct HobConfig {
    inner: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().map(|b| if b == 0 { b' ' } else { b }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> HobStatus {
    match err {
        Error::Config(_) => HobStatus::ParseError,
        Error::ConfigInvalid(_) => HobStatus::InvalidConfig,
        Error::InvalidArgument(_) => HobStatus::InvalidArgument,
        Error::Blowup { .. } | Error::BandExhausted { .. } => HobStatus::Blowup,
        Error::MonitorViolation(_) => HobStatus::MonitorViolation,
        Error::Io(_) => HobStatus::IoError,
        _ => HobStatus::RuntimeError,
    }
}

fn fail(err: &Error) -> HobStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guarded<F: FnOnce() -> HobStatus + UnwindSafe>(f: F) -> HobStatus {
    match catch_unwind(f) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".into());
            set_error(&format!("panic: {msg}"));
            HobStatus::Panic
        }
    }
}

/// `text` must be NUL-terminated and non-NULL; returns None after setting
/// the error state otherwise.
unsafe fn read_str<'a>(text: *const c_char, what: &str) -> Result<&'a str, HobStatus> {
    if text.is_null() {
        set_error(&format!("{what} is NULL"));
        return Err(HobStatus::NullPointer);
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        HobStatus::InvalidUtf8
    })
}

/// Version of the underlying crate as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hob_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the most recent error message on this thread into `buf`
/// (truncated to `len` bytes including the terminating NUL) and returns
/// the full length including the NUL. `buf` may be NULL to query the
/// required length.
///
/// # Safety
/// `buf` must be NULL or valid for writes of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hob_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Parses a TOML configuration document into a new handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hob_config_parse(
    text: *const c_char,
    out: *mut *mut HobConfig,
) -> HobStatus {
    if out.is_null() {
        set_error("out is NULL");
        return HobStatus::NullPointer;
    }
    let text = match read_str(text, "config text") {
        Ok(s) => s,
        Err(status) => return status,
    };
    guarded(AssertUnwindSafe(|| match RunConfig::from_toml_str(text) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(HobConfig { inner: cfg }));
            HobStatus::Ok
        }
        Err(e) => fail(&e),
    }))
}

/// Reads and parses a configuration file into a new handle stored in `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hob_config_from_file(
    path: *const c_char,
    out: *mut *mut HobConfig,
) -> HobStatus {
    if out.is_null() {
        set_error("out is NULL");
        return HobStatus::NullPointer;
    }
    let path = match read_str(path, "config path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    guarded(AssertUnwindSafe(|| match RunConfig::from_file(Path::new(path)) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(HobConfig { inner: cfg }));
            HobStatus::Ok
        }
        Err(e) => fail(&e),
    }))
}

/// Overrides the RNG seed of a parsed configuration.
///
/// # Safety
/// `cfg` must be a live handle from `hob_config_parse`/`hob_config_from_file`.
#[no_mangle]
pub unsafe extern "C" fn hob_config_set_seed(cfg: *mut HobConfig, seed: u64) -> HobStatus {
    match cfg.as_mut() {
        Some(cfg) => {
            cfg.inner.seed = seed;
            HobStatus::Ok
        }
        None => {
            set_error("cfg is NULL");
            HobStatus::NullPointer
        }
    }
}

/// Releases a configuration handle. NULL is a no-op.
///
/// # Safety
/// `cfg` must be NULL or a live handle; the handle is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn hob_config_free(cfg: *mut HobConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs `mode` ("limit", "eps", "convergence", "lemmas" or "selfconv")
/// under `cfg`, writing artifacts into `out_dir`.
///
/// # Safety
/// `cfg` must be a live handle; `mode` and `out_dir` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn hob_execute(
    cfg: *const HobConfig,
    mode: *const c_char,
    out_dir: *const c_char,
) -> HobStatus {
    let cfg = match cfg.as_ref() {
        Some(cfg) => cfg,
        None => {
            set_error("cfg is NULL");
            return HobStatus::NullPointer;
        }
    };
    let mode = match read_str(mode, "mode") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let out_dir = match read_str(out_dir, "out_dir") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let mode = match Mode::from_str(mode) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    guarded(AssertUnwindSafe(
        || match execute(&cfg.inner, mode, Path::new(out_dir)) {
            Ok(()) => HobStatus::Ok,
            Err(e) => fail(&e),
        },
    ))
}

/// Evaluates the equilibrium stress closure at shear `(q1, q2)` for
/// material parameters `(theta, b)`. Writes the six components into
/// `out` in the order t11, t22, t33, t12, t13, t23.
///
/// # Safety
/// `out` must be valid for writes of six doubles.
#[no_mangle]
pub unsafe extern "C" fn hob_stress_closure(
    q1: f64,
    q2: f64,
    theta: f64,
    b: f64,
    out: *mut f64,
) -> HobStatus {
    if out.is_null() {
        set_error("out is NULL");
        return HobStatus::NullPointer;
    }
    let p = match MaterialParams::new(theta, b) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let q = ShearPair::new(q1, q2);
    let (t13, t23) = stress_closure(q, &p);
    let tau = stress_derived(q, t13, t23, &p);
    let vals = [tau.t11, tau.t22, tau.t33, tau.t12, tau.t13, tau.t23];
    std::ptr::copy_nonoverlapping(vals.as_ptr(), out, 6);
    HobStatus::Ok
}
