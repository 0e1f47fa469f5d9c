//! C ABI over `qwalk`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every fallible call returns a [`QwalkStatus`];
//! on failure a message is stored per thread and can be read back with
//! [`qwalk_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qwalk::cli::{canonical_key, resolve, Assignments, RunConfig};
use qwalk::experiments::{run_model, Model};
use qwalk::momentum::analytic_displacement;
use qwalk::rate::{hopping_rates, incoherent_displacement, HoppingRates};
use qwalk::Trajectory;
use serde_json::Value;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwalkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownKey = 3,
    IntegrationFailed = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Integrated models accepted by [`qwalk_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwalkModel {
    FullGpe = 0,
    FullLinearChain = 1,
    Rate = 2,
    RateSelfconsistent = 3,
}

/// Sampled observables of a trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwalkSeriesField {
    Time = 0,
    Norm = 1,
    Rho00 = 2,
    DisplacementT = 3,
}

/// Lattice and integrator settings.
pub struct QwalkParams {
    assignments: Assignments,
    config: RunConfig,
}

/// Result of one integration.
pub struct QwalkTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(QwalkStatus, String);

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QwalkStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QwalkStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QwalkStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(QwalkStatus::NullPointer, format!("{what} is null"))
}

fn invalid(e: impl ToString) -> Failure {
    Failure(QwalkStatus::InvalidArgument, e.to_string())
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn model_from(code: u32) -> Result<Model, Failure> {
    Ok(match code {
        0 => Model::FullGpe,
        1 => Model::FullLinearChain,
        2 => Model::Rate,
        3 => Model::RateSelfconsistent,
        other => return Err(invalid(format!("unknown model code {other}"))),
    })
}

/// Length in bytes of the last error message of this thread, without the
/// terminating NUL; 0 when there is none.
#[no_mangle]
pub extern "C" fn qwalk_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copy the last error message into `buf` (NUL-terminated, truncated to
/// `len - 1` bytes). Returns the number of bytes written without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qwalk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |s| s.as_bytes());
        let n = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// New parameter set with the library defaults (23 cells, `gamma = 2`,
/// tolerances `1e-9`). Never returns null.
#[no_mangle]
pub extern "C" fn qwalk_params_new() -> *mut QwalkParams {
    let assignments = Assignments::default();
    let config = resolve(&assignments, None).expect("defaults are valid");
    Box::into_raw(Box::new(QwalkParams { assignments, config }))
}

/// # Safety
/// `params` must be null or come from [`qwalk_params_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn qwalk_params_free(params: *mut QwalkParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn assign(params: *mut QwalkParams, key: *const c_char, value: Value) -> Result<(), Failure> {
    let params = params.as_mut().ok_or_else(|| null("params"))?;
    let key = read_str(key, "key")?;
    let name = canonical_key(key).map_err(|e| Failure(QwalkStatus::UnknownKey, e.to_string()))?;
    let mut next = params.assignments.clone();
    next.push(name, value);
    let config = resolve(&next, None).map_err(invalid)?;
    params.assignments = next;
    params.config = config;
    Ok(())
}

/// Set a numeric key (`v`, `gamma`, `lattice.n_cells`, `rel_tol`, ...).
/// Keys use the same names as the configuration file. The parameter set is
/// left unchanged when the new value is rejected.
///
/// # Safety
/// `params` must be a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qwalk_params_set(params: *mut QwalkParams, key: *const c_char, value: f64) -> QwalkStatus {
    guard(|| {
        let value = serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| invalid("value must be finite"))?;
        assign(params, key, value)
    })
}

/// Set a string-valued key such as `method` (`"dopri5"`, `"dop853"`) or
/// `stop_survival` (`"none"`).
///
/// # Safety
/// `params` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn qwalk_params_set_str(
    params: *mut QwalkParams,
    key: *const c_char,
    value: *const c_char,
) -> QwalkStatus {
    guard(|| {
        let value = read_str(value, "value")?;
        assign(params, key, Value::String(value.to_string()))
    })
}

/// Read a numeric key. A disabled `stop_survival` reads as NaN.
///
/// # Safety
/// `params` must be a live handle, `key` a NUL-terminated string and `out`
/// a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qwalk_params_get(params: *const QwalkParams, key: *const c_char, out: *mut f64) -> QwalkStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        let name = canonical_key(read_str(key, "key")?).map_err(|e| Failure(QwalkStatus::UnknownKey, e.to_string()))?;
        let tree = serde_json::to_value(&params.config).map_err(invalid)?;
        let value = name.split('.').try_fold(&tree, |node, part| node.get(part));
        let x = match value {
            Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
            Some(Value::Null) => f64::NAN,
            _ => return Err(invalid(format!("{name}: not a numeric key"))),
        };
        write_out(out, x)
    })
}

/// Integrate `model` (a [`QwalkModel`] code) from the localized initial
/// state. On success `*out` receives a new trajectory handle.
///
/// # Safety
/// `params` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qwalk_run(params: *const QwalkParams, model: u32, out: *mut *mut QwalkTrajectory) -> QwalkStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let model = model_from(model)?;
        let cfg = &params.config;
        let tr = run_model(model, &cfg.lattice, &cfg.integrator).map_err(|e| match e {
            qwalk::Error::InvalidParameter { .. } => invalid(e),
            other => Failure(QwalkStatus::IntegrationFailed, other.to_string()),
        })?;
        out.write(Box::into_raw(Box::new(QwalkTrajectory { inner: tr })));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle from [`qwalk_run`] that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn qwalk_trajectory_free(traj: *mut QwalkTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qwalk_trajectory_len(traj: *const QwalkTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.series.len())
}

/// Final displacement, stop time and remaining norm. Any output pointer may
/// be null.
///
/// # Safety
/// `traj` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwalk_trajectory_summary(
    traj: *const QwalkTrajectory,
    dm_final: *mut f64,
    stop_time: *mut f64,
    survival: *mut f64,
) -> QwalkStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null("trajectory"))?.inner;
        for (out, x) in [(dm_final, t.dm_final), (stop_time, t.stop_time), (survival, t.survival)] {
            if !out.is_null() {
                out.write(x);
            }
        }
        Ok(())
    })
}

/// Copy one sampled observable (a [`QwalkSeriesField`] code) into `buf`.
/// Fails with `BufferTooSmall` when `len` is below the trajectory length.
///
/// # Safety
/// `traj` must be a live handle and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qwalk_trajectory_copy(
    traj: *const QwalkTrajectory,
    field: u32,
    buf: *mut f64,
    len: usize,
) -> QwalkStatus {
    guard(|| {
        let s = &traj.as_ref().ok_or_else(|| null("trajectory"))?.inner.series;
        let data = match field {
            0 => &s.times,
            1 => &s.norm,
            2 => &s.rho00,
            3 => &s.dm_t,
            other => return Err(invalid(format!("unknown series field {other}"))),
        };
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len < data.len() {
            return Err(Failure(
                QwalkStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", data.len()),
            ));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// Incoherent displacement `v'^2 / (v^2 + v'^2)`.
///
/// # Safety
/// `out` must be a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qwalk_incoherent_displacement(v: f64, v_prime: f64, out: *mut f64) -> QwalkStatus {
    guard(|| write_out(out, incoherent_displacement(v, v_prime).map_err(invalid)?))
}

/// Hopping rates along the `v` and `v'` bonds for detuning `delta`.
///
/// # Safety
/// `rate_v` and `rate_v_prime` must be writable `double`s.
#[no_mangle]
pub unsafe extern "C" fn qwalk_hopping_rates(
    v: f64,
    v_prime: f64,
    gamma: f64,
    delta: f64,
    rate_v: *mut f64,
    rate_v_prime: *mut f64,
) -> QwalkStatus {
    guard(|| {
        if rate_v.is_null() || rate_v_prime.is_null() {
            return Err(null("output pointer"));
        }
        let r = hopping_rates(v, v_prime, gamma, delta).map_err(invalid)?;
        write_out(rate_v, r.rate_v)?;
        write_out(rate_v_prime, r.rate_vp)
    })
}

/// Closed-form displacement of the rate equation, `rate_v' / (rate_v + rate_v')`.
///
/// # Safety
/// `out` must be a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qwalk_analytic_displacement(rate_v: f64, rate_v_prime: f64, gamma: f64, out: *mut f64) -> QwalkStatus {
    guard(|| {
        let rates = HoppingRates::from_rates(rate_v, rate_v_prime, gamma).map_err(invalid)?;
        write_out(out, analytic_displacement(&rates).map_err(invalid)?)
    })
}
