//! C ABI over the rotorlab library.
//!
//! Conventions:
//! - every function returns an `RlStatus` code unless it is a pure accessor
//! - handles are opaque; free them with the matching `_free` function
//! - the last error message is kept per thread, query it with `rl_last_error`
//!
//! The matching declarations live in `include/rotorlab.h`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rotorlab::config::ExperimentConfig;
use rotorlab::experiments::run_experiment;
use rotorlab::{Error, GOLDEN_MEAN};

pub const RL_OK: c_int = 0;
pub const RL_ERR_NULL_ARG: c_int = 1;
pub const RL_ERR_UTF8: c_int = 2;
pub const RL_ERR_CONFIG: c_int = 3;
pub const RL_ERR_RESONANCE: c_int = 4;
pub const RL_ERR_NUMERIC: c_int = 5;
pub const RL_ERR_IO: c_int = 6;
pub const RL_ERR_PANIC: c_int = 7;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> c_int {
    match err {
        Error::Config(_) => RL_ERR_CONFIG,
        Error::Resonance { .. } => RL_ERR_RESONANCE,
        Error::Io(_) => RL_ERR_IO,
        _ => RL_ERR_NUMERIC,
    }
}

fn fail(err: &Error) -> c_int {
    set_error(&err.to_string());
    status_of(err)
}

/// Opaque config handle.
pub struct RlConfig(ExperimentConfig);

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, c_int> {
    if ptr.is_null() {
        set_error("null pointer argument");
        return Err(RL_ERR_NULL_ARG);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        RL_ERR_UTF8
    })
}

fn guard<F: FnOnce() -> c_int>(f: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            RL_ERR_PANIC
        }
    }
}

/// Copy the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn rl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version string; static storage, do not free.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Golden mean frequency, the default diophantine test angle.
#[no_mangle]
pub extern "C" fn rl_golden_mean() -> f64 {
    GOLDEN_MEAN
}

/// Parse a config from TOML text. On success writes a handle to `out`.
#[no_mangle]
pub unsafe extern "C" fn rl_config_parse(toml: *const c_char, out: *mut *mut RlConfig) -> c_int {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return RL_ERR_NULL_ARG;
        }
        let text = match cstr(toml) {
            Ok(t) => t,
            Err(code) => return code,
        };
        match ExperimentConfig::from_toml(text).and_then(|c| c.validate().map(|_| c)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(RlConfig(cfg)));
                RL_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Parse a config from a file path.
#[no_mangle]
pub unsafe extern "C" fn rl_config_load(path: *const c_char, out: *mut *mut RlConfig) -> c_int {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return RL_ERR_NULL_ARG;
        }
        let path = match cstr(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        match ExperimentConfig::from_path(Path::new(path)).and_then(|c| c.validate().map(|_| c)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(RlConfig(cfg)));
                RL_OK
            }
            Err(e) => fail(&e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn rl_config_free(cfg: *mut RlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

#[no_mangle]
pub unsafe extern "C" fn rl_config_seed(cfg: *const RlConfig) -> u64 {
    if cfg.is_null() {
        return 0;
    }
    (*cfg).0.seed
}

#[no_mangle]
pub unsafe extern "C" fn rl_config_set_seed(cfg: *mut RlConfig, seed: u64) -> c_int {
    if cfg.is_null() {
        set_error("null config handle");
        return RL_ERR_NULL_ARG;
    }
    (*cfg).0.seed = seed;
    RL_OK
}

/// Run the experiment described by `cfg`, writing outputs under `out_dir`.
/// `threads == 0` uses all cores; the thread count never changes the output
/// bytes. On success `*passed` is 1 if every summary check passed, else 0.
#[no_mangle]
pub unsafe extern "C" fn rl_run(
    cfg: *const RlConfig,
    out_dir: *const c_char,
    threads: c_int,
    passed: *mut c_int,
) -> c_int {
    guard(|| {
        if cfg.is_null() {
            set_error("null config handle");
            return RL_ERR_NULL_ARG;
        }
        let dir = match cstr(out_dir) {
            Ok(d) => d,
            Err(code) => return code,
        };
        let threads = if threads <= 0 { None } else { Some(threads as usize) };
        match run_experiment(&(*cfg).0, Path::new(dir), threads) {
            Ok(summary) => {
                if !passed.is_null() {
                    *passed = summary.passed() as c_int;
                }
                RL_OK
            }
            Err(e) => fail(&e),
        }
    })
}
