//! C interface to chirpwave.
//!
//! Every fallible function returns a [`CwStatus`] and reports its results
//! through out-pointers. On failure the message is kept per thread and read
//! back with [`cw_last_error_message`]. Handles are opaque; each `*_new` or
//! `*_load` has a matching `*_free`, and freeing NULL is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chirpwave::harness::acceptance;
use chirpwave::harness::{run_nmse_sweep, ExperimentConfig, SweepKind, SweepResult};
use chirpwave::transforms::{ChirpConfig, DaftPlan};
use chirpwave::waveform::{design_srrc, SrrcFilter};
use chirpwave::{Complex64, Error};

#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CwStatus {
    CW_OK = 0,
    CW_NULL_POINTER = 1,
    CW_INVALID_ARGUMENT = 2,
    CW_LENGTH_MISMATCH = 3,
    CW_CONFIG = 4,
    CW_IO = 5,
    CW_NUMERICAL = 6,
    CW_PANIC = 7,
}

/// Interleaved complex sample, layout-compatible with `double _Complex`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CwComplex {
    pub re: f64,
    pub im: f64,
}

/// DAFT plan for one chirp configuration.
pub struct CwPlan {
    plan: DaftPlan,
}

pub struct CwFilter {
    filt: SrrcFilter,
}

pub struct CwConfig {
    ec: ExperimentConfig,
}

pub struct CwSweep {
    result: SweepResult,
}

#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CwSweepKind {
    CW_SWEEP_SPEED = 0,
    CW_SWEEP_ROLLOFF = 1,
    CW_SWEEP_SPAN = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CwStatus {
    match e {
        Error::LengthMismatch { .. } => CwStatus::CW_LENGTH_MISMATCH,
        Error::ConfigKey { .. } | Error::Parse { .. } | Error::InvalidConfig(_) | Error::UnknownProfile(_) => {
            CwStatus::CW_CONFIG
        }
        Error::Io { .. } => CwStatus::CW_IO,
        Error::Consistency(_) => CwStatus::CW_NUMERICAL,
        _ => CwStatus::CW_INVALID_ARGUMENT,
    }
}

struct Fail(CwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CwStatus::CW_NULL_POINTER, format!("`{what}` is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CwStatus::CW_OK,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            CwStatus::CW_PANIC
        }
    }
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CwStatus::CW_INVALID_ARGUMENT, format!("`{what}` is not UTF-8")))?;
    Ok(Path::new(s))
}

unsafe fn samples<'a>(p: *const CwComplex, len: usize, what: &str) -> Result<&'a [Complex64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // CwComplex and Complex64 are both two packed f64 fields.
    Ok(std::slice::from_raw_parts(p.cast::<Complex64>(), len))
}

unsafe fn samples_mut<'a>(p: *mut CwComplex, len: usize, what: &str) -> Result<&'a mut [Complex64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p.cast::<Complex64>(), len))
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cw_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Plan for `n` subcarriers over a frame of `duration` seconds with chirp
/// rates `c1`, `c2`.
///
/// # Safety
/// `out_plan` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cw_plan_new(n: usize, duration: f64, c1: f64, c2: f64, out_plan: *mut *mut CwPlan) -> CwStatus {
    guard(|| {
        let slot = out(out_plan, "out_plan")?;
        let cfg = ChirpConfig::new(n, duration, c1, c2)?;
        *slot = Box::into_raw(Box::new(CwPlan { plan: DaftPlan::new(&cfg) }));
        Ok(())
    })
}

/// # Safety
/// `plan` must be NULL or a handle from [`cw_plan_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_plan_free(plan: *mut CwPlan) {
    free_box(plan)
}

/// Number of subcarriers, or 0 for a NULL plan.
///
/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_plan_len(plan: *const CwPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.plan.config().n())
}

/// Inverse DAFT: `len` symbols in, `len` time samples out. Input and output
/// may alias.
///
/// # Safety
/// `input` and `output` must each point to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn cw_plan_modulate(
    plan: *const CwPlan,
    input: *const CwComplex,
    output: *mut CwComplex,
    len: usize,
) -> CwStatus {
    guard(|| {
        let p = obj(plan, "plan")?;
        let x = samples(input, len, "input")?.to_vec();
        let y = p.plan.modulate(&x)?;
        samples_mut(output, len, "output")?.copy_from_slice(&y);
        Ok(())
    })
}

/// Forward DAFT, the inverse of [`cw_plan_modulate`].
///
/// # Safety
/// `input` and `output` must each point to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn cw_plan_demodulate(
    plan: *const CwPlan,
    input: *const CwComplex,
    output: *mut CwComplex,
    len: usize,
) -> CwStatus {
    guard(|| {
        let p = obj(plan, "plan")?;
        let x = samples(input, len, "input")?.to_vec();
        let y = p.plan.demodulate(&x)?;
        samples_mut(output, len, "output")?.copy_from_slice(&y);
        Ok(())
    })
}

/// Unit-energy SRRC filter with roll-off `beta`, span `q` symbols and `o`
/// samples per symbol period `ts`.
///
/// # Safety
/// `out_filter` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cw_srrc_new(beta: f64, q: usize, o: usize, ts: f64, out_filter: *mut *mut CwFilter) -> CwStatus {
    guard(|| {
        let slot = out(out_filter, "out_filter")?;
        let filt = design_srrc(beta, q, o, ts)?;
        *slot = Box::into_raw(Box::new(CwFilter { filt }));
        Ok(())
    })
}

/// # Safety
/// `filter` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_srrc_free(filter: *mut CwFilter) {
    free_box(filter)
}

/// Number of taps, Q·O + 1, or 0 for NULL.
///
/// # Safety
/// `filter` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_srrc_len(filter: *const CwFilter) -> usize {
    filter.as_ref().map_or(0, |f| f.filt.taps().len())
}

/// Copies the taps into `taps`, which must hold exactly [`cw_srrc_len`] values.
///
/// # Safety
/// `taps` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_srrc_taps(filter: *const CwFilter, taps: *mut f64, len: usize) -> CwStatus {
    guard(|| {
        let f = obj(filter, "filter")?;
        let src = f.filt.taps();
        if len != src.len() {
            return Err(Error::LengthMismatch { expected: src.len(), got: len }.into());
        }
        if taps.is_null() {
            return Err(null("taps"));
        }
        std::slice::from_raw_parts_mut(taps, len).copy_from_slice(src);
        Ok(())
    })
}

/// Experiment configuration with every key at its default.
///
/// # Safety
/// `out_config` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cw_config_default(out_config: *mut *mut CwConfig) -> CwStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        *slot = Box::into_raw(Box::new(CwConfig { ec: ExperimentConfig::default() }));
        Ok(())
    })
}

/// Reads a `key = value` configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_config` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cw_config_load(path: *const c_char, out_config: *mut *mut CwConfig) -> CwStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let ec = ExperimentConfig::load(path_arg(path, "path")?)?;
        *slot = Box::into_raw(Box::new(CwConfig { ec }));
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_config_free(config: *mut CwConfig) {
    free_box(config)
}

/// # Safety
/// `config` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_config_set_seed(config: *mut CwConfig, seed: u64) -> CwStatus {
    guard(|| {
        out(config, "config")?.ec.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_config_set_trials(config: *mut CwConfig, trials: usize) -> CwStatus {
    guard(|| {
        let c = out(config, "config")?;
        let mut ec = c.ec.clone();
        ec.trials = trials;
        ec.validate()?;
        c.ec = ec;
        Ok(())
    })
}

/// Switches to the desk-scale setup: N = 256, at most 20 trials, O ≤ 8.
///
/// # Safety
/// `config` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_config_small(config: *mut CwConfig) -> CwStatus {
    guard(|| {
        let c = out(config, "config")?;
        c.ec = c.ec.clone().small();
        Ok(())
    })
}

/// Runs an NMSE sweep over the configured (or default) values.
///
/// # Safety
/// `config` must be a live handle and `out_sweep` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cw_nmse_run(config: *const CwConfig, kind: CwSweepKind, out_sweep: *mut *mut CwSweep) -> CwStatus {
    guard(|| {
        let c = obj(config, "config")?;
        let slot = out(out_sweep, "out_sweep")?;
        let sweep = match kind {
            CwSweepKind::CW_SWEEP_SPEED => SweepKind::Speed,
            CwSweepKind::CW_SWEEP_ROLLOFF => SweepKind::Rolloff,
            CwSweepKind::CW_SWEEP_SPAN => SweepKind::Span,
        };
        let ec = ExperimentConfig { sweep, ..c.ec.clone() };
        let result = run_nmse_sweep(&ec)?;
        *slot = Box::into_raw(Box::new(CwSweep { result }));
        Ok(())
    })
}

/// # Safety
/// `sweep` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_sweep_free(sweep: *mut CwSweep) {
    free_box(sweep)
}

/// Number of sweep points, or 0 for NULL.
///
/// # Safety
/// `sweep` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_sweep_len(sweep: *const CwSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.result.points.len())
}

/// Point `index`: swept value, mean NMSE in dB and its standard error.
///
/// # Safety
/// All out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_sweep_point(
    sweep: *const CwSweep,
    index: usize,
    value: *mut f64,
    nmse_db: *mut f64,
    stderr_db: *mut f64,
) -> CwStatus {
    guard(|| {
        let s = obj(sweep, "sweep")?;
        let p = s.result.points.get(index).ok_or_else(|| {
            Fail(CwStatus::CW_INVALID_ARGUMENT, format!("point {index} of {}", s.result.points.len()))
        })?;
        *out(value, "value")? = p.value;
        *out(nmse_db, "nmse_db")? = p.nmse_db;
        *out(stderr_db, "stderr_db")? = p.stderr_db;
        Ok(())
    })
}

/// Writes `sweep_value,nmse_db,stderr_db` rows to `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cw_sweep_write_csv(sweep: *const CwSweep, path: *const c_char) -> CwStatus {
    guard(|| {
        let s = obj(sweep, "sweep")?;
        s.result.write_csv(path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Evaluates acceptance criterion `id` (1..=13). `full` selects the
/// full-size NMSE sweeps.
///
/// # Safety
/// `passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cw_selftest_criterion(id: u8, full: bool, passed: *mut bool) -> CwStatus {
    guard(|| {
        let slot = out(passed, "passed")?;
        *slot = acceptance::evaluate(id, full)?.passed;
        Ok(())
    })
}
