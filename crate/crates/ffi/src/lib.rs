//! C interface to the `tfim` crate.
//!
//! Every function returns a [`TfimStatus`]. On failure the message is kept
//! per thread and read with [`tfim_last_error_message`]. Handles are opaque
//! and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tfim::experiments::{self, RunConfig, RunOutcome};
use tfim::geometry::{Bc, LatticeBox};
use tfim::spectral::{wired_magnetization, SpectralModel};
use tfim::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TfimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Domain = 5,
    Estimation = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

/// Boundary condition codes.
pub const TFIM_BC_FREE: u32 = 0;
pub const TFIM_BC_PERIODIC: u32 = 1;
pub const TFIM_BC_WIRED: u32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> TfimStatus {
    match e {
        Error::Config(_) => TfimStatus::Config,
        Error::Domain(_) | Error::Singular(_) | Error::DegenerateRate(_) | Error::TooLarge { .. } => TfimStatus::Domain,
        Error::Sampling(_) | Error::Estimation(_) => TfimStatus::Estimation,
        Error::Numerical(_) => TfimStatus::Numerical,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => TfimStatus::Io,
    }
}

struct Failure(TfimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TfimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TfimStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside the library");
            TfimStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(TfimStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(TfimStatus::InvalidArgument, msg.into())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(TfimStatus::InvalidUtf8, "string is not valid UTF-8".into()))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

fn bc(code: u32) -> Result<Bc, Failure> {
    match code {
        TFIM_BC_FREE => Ok(Bc::Free),
        TFIM_BC_PERIODIC => Ok(Bc::Periodic),
        TFIM_BC_WIRED => Ok(Bc::Wired),
        other => Err(invalid(format!("unknown boundary code {other}"))),
    }
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn tfim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// A finished experiment run.
pub struct TfimRun {
    outcome: RunOutcome,
}

/// Parses `config` (TOML, or JSON when `is_json` is nonzero), runs it and
/// stores the handle in `*out`.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfim_run_config(config: *const c_char, is_json: i32, workers: u32, out: *mut *mut TfimRun) -> TfimStatus {
    guard(|| {
        let text = read_str(config)?;
        if out.is_null() {
            return Err(null());
        }
        let config = if is_json != 0 { RunConfig::from_json(text)? } else { RunConfig::from_toml(text)? };
        let outcome = experiments::run(&config, workers.max(1) as usize)?;
        write(out, Box::into_raw(Box::new(TfimRun { outcome })))
    })
}

/// # Safety
/// `run` must come from [`tfim_run_config`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn tfim_run_row_count(run: *const TfimRun, out: *mut usize) -> TfimStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(null)?;
        write(out, run.outcome.rows.len())
    })
}

/// Estimate and standard error of row `index`.
///
/// # Safety
/// `run` must be a live handle; `estimate` and `std_error` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tfim_run_row(run: *const TfimRun, index: usize, estimate: *mut f64, std_error: *mut f64) -> TfimStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(null)?;
        let row = run.outcome.rows.get(index).ok_or_else(|| invalid(format!("row {index} out of range")))?;
        write(estimate, row.estimate)?;
        write(std_error, row.stderr)
    })
}

/// `*passed` is 1 when no check of the run failed, 0 otherwise.
///
/// # Safety
/// `run` must be a live handle and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfim_run_passed(run: *const TfimRun, passed: *mut i32) -> TfimStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(null)?;
        write(passed, run.outcome.passed() as i32)
    })
}

/// Writes the result table as CSV to `path`.
///
/// # Safety
/// `run` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tfim_run_write_csv(run: *const TfimRun, path: *const c_char) -> TfimStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(null)?;
        let path = Path::new(read_str(path)?);
        let file = std::fs::File::create(path).map_err(Error::from)?;
        experiments::write_csv(&run.outcome.rows, file)?;
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`tfim_run_config`] or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tfim_run_free(run: *mut TfimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Exact diagonalization of a box `{-half..half}^dim` (or `{-half+1..half}^dim`
/// when `even_side` is nonzero).
pub struct TfimModel {
    model: SpectralModel,
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfim_model_new(
    dim: u32,
    half: u32,
    even_side: i32,
    space: u32,
    lambda: f64,
    delta: f64,
    out: *mut *mut TfimModel,
) -> TfimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let lattice = if even_side != 0 {
            LatticeBox::even_side(dim as usize, half as usize)?
        } else {
            LatticeBox::symmetric(dim as usize, half as usize)?
        };
        let model = SpectralModel::build(&lattice, bc(space)?, lambda, delta, 0.0)?;
        write(out, Box::into_raw(Box::new(TfimModel { model })))
    })
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfim_model_sites(model: *const TfimModel, out: *mut usize) -> TfimStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(null)?;
        write(out, model.model.n_sites())
    })
}

/// `⟨σ(x, s) σ(y, t)⟩` on the time interval of length `r` with time
/// boundary `time`. Sites are indices into the box.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfim_model_correlation(
    model: *const TfimModel,
    x: usize,
    s: f64,
    y: usize,
    t: f64,
    time: u32,
    r: f64,
    out: *mut f64,
) -> TfimStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(null)?;
        let n = model.model.n_sites();
        if x >= n || y >= n {
            return Err(invalid(format!("site index out of range for {n} sites")));
        }
        let value = model.model.correlation(&[(x, s), (y, t)], bc(time)?, r)?;
        write(out, value)
    })
}

/// # Safety
/// `model` must come from [`tfim_model_new`] or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tfim_model_free(model: *mut TfimModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// `⟨σ(0,0)⟩` in `{-half..half}^dim` with wired space and time on `[-r/2, r/2]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfim_wired_magnetization(dim: u32, half: u32, r: f64, lambda: f64, delta: f64, out: *mut f64) -> TfimStatus {
    guard(|| {
        let value = wired_magnetization(dim as usize, half as usize, r, lambda, delta)?;
        write(out, value)
    })
}
