//! C ABI for the octolift simulation.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_read`
//! functions and released by the matching `*_free`. Every fallible function
//! returns an [`OlStatus`]; on failure a human-readable description is
//! available from [`ol_last_error_message`] on the same thread until the next
//! failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use octolift::harness::checks::{alloc_check, care_check};
use octolift::harness::log::NUM_COLUMNS;
use octolift::harness::{run_experiment, DisturbanceProfile, Experiment, ExperimentConfig, RunOutput};
use octolift::Error;

/// Number of values in one log row, in the CSV column order.
pub const OL_LOG_COLUMNS: usize = 52;
const _: () = assert!(OL_LOG_COLUMNS == NUM_COLUMNS);

/// Result codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Io = 4,
    Numerical = 5,
    AllocationDomain = 6,
    Estimation = 7,
    OutOfRange = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Experiment configuration.
pub struct OlConfig(ExperimentConfig);

/// Stepwise closed-loop simulation.
pub struct OlExperiment(Experiment);

/// Completed run: log, statistics and metrics.
pub struct OlRunResult(RunOutput);

/// Summary metrics of a completed run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OlMetrics {
    pub steps: usize,
    pub rmse_final_period: [f64; 3],
    pub terminal_position_error: [f64; 3],
    pub terminal_parameter_error: [f64; 2],
    /// NaN when the horizon ends before the settle time.
    pub max_parameter_error_after_settle: [f64; 2],
    /// NaN when no horizontal disturbance window lies in the horizon.
    pub disturbance_tracking_error: f64,
    pub max_alloc_residual: f64,
    pub max_constraint_violation: f64,
    pub lyapunov_violations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("interior NULs removed"));
}

fn root_cause(e: &Error) -> &Error {
    match e {
        Error::InStage { source, .. } | Error::Step { source, .. } => root_cause(source),
        other => other,
    }
}

fn status_of(e: &Error) -> OlStatus {
    match root_cause(e) {
        Error::InvalidParameter { .. } | Error::ConfigParse(_) => OlStatus::InvalidConfig,
        Error::Io { .. } | Error::LogParse { .. } => OlStatus::Io,
        Error::AllocationDomain(_) => OlStatus::AllocationDomain,
        Error::NotPositiveDefinite | Error::InnovationCovSingular => OlStatus::Estimation,
        _ => OlStatus::Numerical,
    }
}

struct Failure(OlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut msg = e.to_string();
        let mut src = std::error::Error::source(&e);
        while let Some(s) = src {
            msg.push_str(": ");
            msg.push_str(&s.to_string());
            src = s.source();
        }
        Failure(status_of(&e), msg)
    }
}

fn fail(status: OlStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            OlStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref()
        .ok_or_else(|| fail(OlStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn borrow_mut<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut()
        .ok_or_else(|| fail(OlStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn string<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(fail(OlStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(OlStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let slot = borrow_mut(out, "out")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(ptr: *mut T) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

/// Copies `text` plus a terminating NUL into `buf`; `needed` receives the
/// required capacity in bytes either way.
unsafe fn copy_out(text: &str, buf: *mut c_char, capacity: usize, needed: *mut usize) -> Result<(), Failure> {
    let required = text.len() + 1;
    if let Some(n) = needed.as_mut() {
        *n = required;
    }
    if buf.is_null() || capacity < required {
        return Err(fail(
            OlStatus::BufferTooSmall,
            format!("buffer of {capacity} bytes, {required} required"),
        ));
    }
    std::ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ol_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn ol_status_name(status: OlStatus) -> *const c_char {
    let s: &'static CStr = match status {
        OlStatus::Ok => c"ok",
        OlStatus::NullPointer => c"null pointer",
        OlStatus::InvalidUtf8 => c"invalid utf-8",
        OlStatus::InvalidConfig => c"invalid config",
        OlStatus::Io => c"i/o error",
        OlStatus::Numerical => c"numerical failure",
        OlStatus::AllocationDomain => c"allocation domain error",
        OlStatus::Estimation => c"estimation failure",
        OlStatus::OutOfRange => c"out of range",
        OlStatus::BufferTooSmall => c"buffer too small",
        OlStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Built-in load-transport scenario.
///
/// # Safety
/// `out` must be a valid pointer to writable handle storage.
#[no_mangle]
pub unsafe extern "C" fn ol_config_default(out: *mut *mut OlConfig) -> OlStatus {
    guard(|| emit(out, OlConfig(ExperimentConfig::default())))
}

/// Parses and validates a TOML configuration document.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` as for [`ol_config_default`].
#[no_mangle]
pub unsafe extern "C" fn ol_config_from_toml(toml: *const c_char, out: *mut *mut OlConfig) -> OlStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_toml_str(string(toml, "toml")?)?;
        emit(out, OlConfig(cfg))
    })
}

/// Reads and validates a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` as for [`ol_config_default`].
#[no_mangle]
pub unsafe extern "C" fn ol_config_read(path: *const c_char, out: *mut *mut OlConfig) -> OlStatus {
    guard(|| {
        let cfg = ExperimentConfig::read(Path::new(string(path, "path")?))?;
        emit(out, OlConfig(cfg))
    })
}

/// Serializes a configuration to TOML.
///
/// # Safety
/// `cfg` must be a live handle; `buf` must hold `capacity` bytes or be null;
/// `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ol_config_to_toml(
    cfg: *const OlConfig,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> OlStatus {
    guard(|| {
        let text = borrow(cfg, "cfg")?.0.to_toml_string()?;
        copy_out(&text, buf, capacity, needed)
    })
}

/// Overrides the run options exposed on the command line.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ol_config_set_run_options(
    cfg: *mut OlConfig,
    seed: u64,
    noise: bool,
    true_params: bool,
    disturbance: bool,
) -> OlStatus {
    guard(|| {
        let c = &mut borrow_mut(cfg, "cfg")?.0;
        c.run.seed = seed;
        c.run.noise = noise;
        c.run.true_params = true_params;
        if !disturbance {
            c.disturbance = DisturbanceProfile::none();
        }
        Ok(())
    })
}

/// Sets the simulated horizon in seconds.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ol_config_set_horizon(cfg: *mut OlConfig, horizon: f64) -> OlStatus {
    guard(|| {
        let c = &mut borrow_mut(cfg, "cfg")?.0;
        let previous = c.run.horizon;
        c.run.horizon = horizon;
        if let Err(e) = c.validate() {
            c.run.horizon = previous;
            return Err(e.into());
        }
        Ok(())
    })
}

/// Number of samples the configuration simulates.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ol_config_num_steps(cfg: *const OlConfig, out: *mut usize) -> OlStatus {
    guard(|| {
        *borrow_mut(out, "out")? = borrow(cfg, "cfg")?.0.num_steps();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ol_config_free(cfg: *mut OlConfig) {
    release(cfg);
}

/// Solves both Riccati equations; `passed` reports residual, symmetry,
/// definiteness and closed-loop stability together.
///
/// # Safety
/// `cfg` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ol_care_check(cfg: *const OlConfig, passed: *mut bool) -> OlStatus {
    guard(|| {
        let reports = care_check(&borrow(cfg, "cfg")?.0)?;
        *borrow_mut(passed, "passed")? = reports.iter().all(|r| r.passed);
        Ok(())
    })
}

/// Allocation round-trip and KKT exactness over `samples` random inputs.
///
/// # Safety
/// `cfg` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ol_alloc_check(cfg: *const OlConfig, samples: usize, passed: *mut bool) -> OlStatus {
    guard(|| {
        let report = alloc_check(&borrow(cfg, "cfg")?.0, samples)?;
        *borrow_mut(passed, "passed")? = report.passed;
        Ok(())
    })
}

/// Creates a stepwise simulation from a configuration (copied).
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ol_experiment_new(cfg: *const OlConfig, out: *mut *mut OlExperiment) -> OlStatus {
    guard(|| {
        let exp = Experiment::new(borrow(cfg, "cfg")?.0.clone())?;
        emit(out, OlExperiment(exp))
    })
}

/// Advances one sample and writes its log row (`OL_LOG_COLUMNS` values).
///
/// # Safety
/// `exp` must be a live handle; `row` must point to `OL_LOG_COLUMNS`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ol_experiment_step(exp: *mut OlExperiment, row: *mut f64) -> OlStatus {
    guard(|| {
        let e = borrow_mut(exp, "exp")?;
        if row.is_null() {
            return Err(fail(OlStatus::NullPointer, "`row` is null"));
        }
        let values = e.0.step()?.to_values();
        std::ptr::copy_nonoverlapping(values.as_ptr(), row, OL_LOG_COLUMNS);
        Ok(())
    })
}

/// Simulation time of the next sample (s).
///
/// # Safety
/// `exp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ol_experiment_time(exp: *const OlExperiment, out: *mut f64) -> OlStatus {
    guard(|| {
        *borrow_mut(out, "out")? = borrow(exp, "exp")?.0.time();
        Ok(())
    })
}

/// # Safety
/// `exp` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ol_experiment_free(exp: *mut OlExperiment) {
    release(exp);
}

/// Runs the full horizon.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ol_run(cfg: *const OlConfig, out: *mut *mut OlRunResult) -> OlStatus {
    guard(|| {
        let result = run_experiment(&borrow(cfg, "cfg")?.0)?;
        emit(out, OlRunResult(result))
    })
}

/// Number of logged samples.
///
/// # Safety
/// `res` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ol_run_result_len(res: *const OlRunResult, out: *mut usize) -> OlStatus {
    guard(|| {
        *borrow_mut(out, "out")? = borrow(res, "res")?.0.log.len();
        Ok(())
    })
}

/// Copies log row `index` (`OL_LOG_COLUMNS` values).
///
/// # Safety
/// `res` must be a live handle; `row` must point to `OL_LOG_COLUMNS`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ol_run_result_row(res: *const OlRunResult, index: usize, row: *mut f64) -> OlStatus {
    guard(|| {
        let log = &borrow(res, "res")?.0.log;
        let r = log.rows.get(index).ok_or_else(|| {
            fail(OlStatus::OutOfRange, format!("row {index} of {} requested", log.len()))
        })?;
        if row.is_null() {
            return Err(fail(OlStatus::NullPointer, "`row` is null"));
        }
        std::ptr::copy_nonoverlapping(r.to_values().as_ptr(), row, OL_LOG_COLUMNS);
        Ok(())
    })
}

/// Summary metrics of the run.
///
/// # Safety
/// `res` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ol_run_result_metrics(res: *const OlRunResult, out: *mut OlMetrics) -> OlStatus {
    guard(|| {
        let r = &borrow(res, "res")?.0;
        let m = &r.metrics;
        *borrow_mut(out, "out")? = OlMetrics {
            steps: m.steps,
            rmse_final_period: m.rmse_final_period,
            terminal_position_error: m.terminal_position_error,
            terminal_parameter_error: m.terminal_parameter_error,
            max_parameter_error_after_settle: m.max_parameter_error_after_settle.unwrap_or([f64::NAN; 2]),
            disturbance_tracking_error: m.disturbance_tracking_error.unwrap_or(f64::NAN),
            max_alloc_residual: m.max_alloc_residual,
            max_constraint_violation: r.stats.max_constraint_violation,
            lyapunov_violations: m.lyapunov_violations,
        };
        Ok(())
    })
}

/// Writes the CSV log.
///
/// # Safety
/// `res` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ol_run_result_write_csv(res: *const OlRunResult, path: *const c_char) -> OlStatus {
    guard(|| {
        let r = borrow(res, "res")?;
        r.0.log.write(Path::new(string(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ol_run_result_free(res: *mut OlRunResult) {
    release(res);
}
