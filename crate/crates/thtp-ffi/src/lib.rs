//! C ABI over the simulator: opaque config and run handles, integer error
//! codes, UTF-8 paths. The header is generated into `include/thtp.h` at
//! build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use thtp::metrics::{run_experiment, write_time_series_file, RunOutput};
use thtp::SimConfig;

pub const THTP_OK: i32 = 0;
pub const THTP_ERR_NULL_ARG: i32 = 1;
pub const THTP_ERR_UTF8: i32 = 2;
pub const THTP_ERR_CONFIG: i32 = 3;
pub const THTP_ERR_RUN: i32 = 4;
pub const THTP_ERR_IO: i32 = 5;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Last error message for this thread, or NULL. Valid until the next failing
/// call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn thtp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map(|c| c.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// Opaque simulation configuration.
pub struct ThtpConfig(SimConfig);

/// Opaque finished run: summary numbers plus the sampled time series.
pub struct ThtpRun(RunOutput);

/// Summary of one finished run.
#[repr(C)]
pub struct ThtpSummary {
    pub localizations: u64,
    pub localized_fraction: f64,
    pub msgs_spread: u64,
    pub msgs_agent: u64,
    pub msgs_routing: u64,
    pub msgs_per_node: f64,
    pub giant_component_fraction: f64,
    pub sample_count: u64,
}

/// New config with the default parameters. Free with `thtp_config_free`.
#[no_mangle]
pub extern "C" fn thtp_config_new() -> *mut ThtpConfig {
    Box::into_raw(Box::new(ThtpConfig(SimConfig::default())))
}

/// # Safety
/// `cfg` must come from `thtp_config_new`/`thtp_config_parse_file` and not
/// have been freed.
#[no_mangle]
pub unsafe extern "C" fn thtp_config_free(cfg: *mut ThtpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn cstr<'a>(p: *const c_char) -> Result<&'a str, i32> {
    if p.is_null() {
        set_error("null argument".into());
        return Err(THTP_ERR_NULL_ARG);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8".into());
        THTP_ERR_UTF8
    })
}

/// Parses a flat key = value config file. On success writes the new handle
/// into `out`. Free with `thtp_config_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn thtp_config_parse_file(
    path: *const c_char,
    out: *mut *mut ThtpConfig,
) -> i32 {
    if out.is_null() {
        set_error("null output pointer".into());
        return THTP_ERR_NULL_ARG;
    }
    let path = match cstr(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match SimConfig::parse_file(Path::new(path)) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(ThtpConfig(cfg)));
            THTP_OK
        }
        Err(e) => {
            set_error(e.to_string());
            THTP_ERR_CONFIG
        }
    }
}

/// Sets one config key (same keys as the config file format).
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn thtp_config_set(
    cfg: *mut ThtpConfig,
    key: *const c_char,
    value: *const c_char,
) -> i32 {
    if cfg.is_null() {
        set_error("null config".into());
        return THTP_ERR_NULL_ARG;
    }
    let (key, value) = match (cstr(key), cstr(value)) {
        (Ok(k), Ok(v)) => (k, v),
        (Err(code), _) | (_, Err(code)) => return code,
    };
    match (*cfg).0.set(key, value, 0) {
        Ok(()) => THTP_OK,
        Err(e) => {
            set_error(e.to_string());
            THTP_ERR_CONFIG
        }
    }
}

/// Validates the config without running it.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn thtp_config_validate(cfg: *const ThtpConfig) -> i32 {
    if cfg.is_null() {
        set_error("null config".into());
        return THTP_ERR_NULL_ARG;
    }
    match (*cfg).0.validate() {
        Ok(()) => THTP_OK,
        Err(e) => {
            set_error(e.to_string());
            THTP_ERR_CONFIG
        }
    }
}

/// Runs one experiment with the given seed. On success writes the run handle
/// into `out`; free it with `thtp_run_free`.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn thtp_run_experiment(
    cfg: *const ThtpConfig,
    seed: u64,
    out: *mut *mut ThtpRun,
) -> i32 {
    if cfg.is_null() || out.is_null() {
        set_error("null argument".into());
        return THTP_ERR_NULL_ARG;
    }
    match run_experiment(&(*cfg).0, seed) {
        Ok(output) => {
            *out = Box::into_raw(Box::new(ThtpRun(output)));
            THTP_OK
        }
        Err(e) => {
            set_error(e.to_string());
            THTP_ERR_RUN
        }
    }
}

/// # Safety
/// `run` must come from `thtp_run_experiment` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn thtp_run_free(run: *mut ThtpRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Copies the run summary into `out`.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn thtp_run_summary(run: *const ThtpRun, out: *mut ThtpSummary) -> i32 {
    if run.is_null() || out.is_null() {
        set_error("null argument".into());
        return THTP_ERR_NULL_ARG;
    }
    let output = &(*run).0;
    *out = ThtpSummary {
        localizations: output.summary.localizations,
        localized_fraction: output.summary.localized_fraction,
        msgs_spread: output.summary.msgs_spread,
        msgs_agent: output.summary.msgs_agent,
        msgs_routing: output.summary.msgs_routing,
        msgs_per_node: output.summary.msgs_per_node,
        giant_component_fraction: output.summary.giant_component_fraction,
        sample_count: output.rows.len() as u64,
    };
    THTP_OK
}

/// Writes the run's time series as CSV to `path`.
///
/// # Safety
/// `run` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn thtp_run_write_csv(run: *const ThtpRun, path: *const c_char) -> i32 {
    if run.is_null() {
        set_error("null run".into());
        return THTP_ERR_NULL_ARG;
    }
    let path = match cstr(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match write_time_series_file(&(*run).0.rows, Path::new(path)) {
        Ok(()) => THTP_OK,
        Err(e) => {
            set_error(e.to_string());
            THTP_ERR_IO
        }
    }
}
