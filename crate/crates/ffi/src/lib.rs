//! C ABI for the hyrep simulation library.
//!
//! Every fallible call returns a [`HyrepStatus`]; on failure the message is
//! kept per thread and read with [`hyrep_last_error`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `_free` function. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hyrep::cli::{run, Command};
use hyrep::config::RunConfig;
use hyrep::fock::{cat_single, cat_two, fidelity, PureState};
use hyrep::swapping::{ideal_acceptance, k_n, SwapParams};
use hyrep::HyrepError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HyrepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientCutoff = 3,
    ZeroNorm = 4,
    Config = 5,
    Numeric = 6,
    ValidationFailed = 7,
    Panic = 8,
}

/// Opaque pure state.
pub struct HyrepState(PureState);

/// Opaque run configuration.
pub struct HyrepConfig(RunConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &HyrepError) -> HyrepStatus {
    match err {
        HyrepError::InsufficientCutoff { .. } | HyrepError::TruncationTooSmall { .. } => HyrepStatus::InsufficientCutoff,
        HyrepError::InvalidParameter { .. } | HyrepError::InvalidMode { .. } | HyrepError::SameMode(_) | HyrepError::ShapeMismatch(_) => {
            HyrepStatus::InvalidArgument
        }
        HyrepError::ZeroNorm => HyrepStatus::ZeroNorm,
        HyrepError::Config(_) | HyrepError::Io(_) => HyrepStatus::Config,
        _ => HyrepStatus::Numeric,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (HyrepStatus, String)>) -> HyrepStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HyrepStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HyrepStatus::Panic
        }
    }
}

fn lib<T>(r: hyrep::Result<T>) -> Result<T, (HyrepStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), (HyrepStatus, String)> {
    if p.is_null() {
        Err((HyrepStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next hyrep call on the same thread.
#[no_mangle]
pub extern "C" fn hyrep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// `k_n` of the final-state recurrence.
#[no_mangle]
pub extern "C" fn hyrep_k_n(n: usize) -> f64 {
    k_n(n)
}

/// Normalized single-mode cat `|α⟩ + |−α⟩` truncated at `cutoff`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hyrep_state_cat_single(alpha: f64, cutoff: usize, out: *mut *mut HyrepState) -> HyrepStatus {
    guard(|| {
        non_null(out, "out")?;
        let s = lib(cat_single(alpha, cutoff))?;
        *out = Box::into_raw(Box::new(HyrepState(s)));
        Ok(())
    })
}

/// Normalized two-mode cat `e^{iθ}|α,α⟩ + e^{−iθ}|−α,−α⟩`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hyrep_state_cat_two(alpha: f64, theta: f64, cutoff: usize, out: *mut *mut HyrepState) -> HyrepStatus {
    guard(|| {
        non_null(out, "out")?;
        let s = lib(cat_two(alpha, theta, cutoff))?;
        *out = Box::into_raw(Box::new(HyrepState(s)));
        Ok(())
    })
}

/// Releases a state; null is ignored.
///
/// # Safety
/// `state` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hyrep_state_free(state: *mut HyrepState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyrep_state_nmodes(state: *const HyrepState) -> usize {
    state.as_ref().map_or(0, |s| s.0.nmodes())
}

/// Squared norm of a state.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyrep_state_norm_sqr(state: *const HyrepState, out: *mut f64) -> HyrepStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(out, "out")?;
        *out = (*state).0.norm_sqr();
        Ok(())
    })
}

/// `|⟨a|b⟩|²` of two normalized states of equal shape.
///
/// # Safety
/// `a`, `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyrep_state_fidelity(a: *const HyrepState, b: *const HyrepState, out: *mut f64) -> HyrepStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        non_null(out, "out")?;
        *out = lib(fidelity(&(*a).0, &(*b).0))?;
        Ok(())
    })
}

/// Exact acceptance probability of swapping two ideal two-mode cats.
/// `k` auxiliary cats are used; `delta_swap < 0` selects the default window.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyrep_swap_acceptance(alpha: f64, k: usize, delta_swap: f64, out: *mut f64) -> HyrepStatus {
    guard(|| {
        non_null(out, "out")?;
        let mut params = SwapParams::simple(alpha);
        params.k = k;
        if delta_swap >= 0.0 {
            params.delta_swap = delta_swap;
        }
        *out = lib(ideal_acceptance(&params))?;
        Ok(())
    })
}

/// Default configuration.
#[no_mangle]
pub extern "C" fn hyrep_config_default() -> *mut HyrepConfig {
    Box::into_raw(Box::new(HyrepConfig(RunConfig::default())))
}

/// Parses a flat TOML configuration.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyrep_config_from_toml(text: *const c_char, out: *mut *mut HyrepConfig) -> HyrepStatus {
    guard(|| {
        non_null(text, "text")?;
        non_null(out, "out")?;
        let s = CStr::from_ptr(text).to_str().map_err(|_| (HyrepStatus::InvalidArgument, "config is not UTF-8".to_string()))?;
        let cfg = lib(RunConfig::from_toml(s))?;
        *out = Box::into_raw(Box::new(HyrepConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hyrep_config_free(cfg: *mut HyrepConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Overrides seed, workers and trials; a zero `trials` keeps the current value.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyrep_config_set_run(cfg: *mut HyrepConfig, seed: u64, workers: usize, trials: usize) -> HyrepStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        let c = &mut (*cfg).0;
        c.seed = seed;
        c.workers = workers;
        if trials > 0 {
            c.trials = trials;
        }
        Ok(())
    })
}

/// Runs a CLI command (`fig2`, `fig3`, `breed`, `swap` or `validate`) and
/// returns its CSV or JSON text in `*out`, to be released with
/// [`hyrep_string_free`]. A failed `validate` still fills `*out` and returns
/// `ValidationFailed`.
///
/// # Safety
/// `cfg` must be a live handle, `command` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyrep_run(cfg: *const HyrepConfig, command: *const c_char, out: *mut *mut c_char) -> HyrepStatus {
    let mut failed = false;
    let status = guard(|| {
        non_null(cfg, "cfg")?;
        non_null(command, "command")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let name = CStr::from_ptr(command).to_string_lossy();
        let cmd = match name.as_ref() {
            "fig2" => Command::Fig2,
            "fig3" => Command::Fig3,
            "breed" => Command::Breed,
            "swap" => Command::Swap,
            "validate" => Command::Validate,
            other => return Err((HyrepStatus::InvalidArgument, format!("unknown command `{other}`"))),
        };
        let o = lib(run(cmd, &(*cfg).0))?;
        failed = !o.passed;
        *out = CString::new(o.text).map_err(|_| (HyrepStatus::Numeric, "output contains NUL".to_string()))?.into_raw();
        Ok(())
    });
    if status == HyrepStatus::Ok && failed {
        set_error("validation failed");
        return HyrepStatus::ValidationFailed;
    }
    status
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hyrep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hyrep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
