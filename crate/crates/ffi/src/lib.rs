//! C ABI over the double-precision backend of `relaydelay`.
//!
//! Every function returns an [`RdStatus`]. On failure a message is kept per
//! thread and can be read with [`rd_last_error`]. Trajectories are opaque
//! handles created by [`rd_simulate`] and released with
//! [`rd_trajectory_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use relaydelay::engine::{simulate_with, InitialState, Sign, SimulateOptions, Trajectory, DEFAULT_EVENT_CAP};
use relaydelay::error::RelayError;
use relaydelay::orbit::{classify, constants, phi_map, ClassKind, PoincarePair};
use relaydelay::relay::Params;
use relaydelay::stability::multipliers;

/// Status codes. The first five match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    Io = 1,
    BadInput = 2,
    EngineGuard = 3,
    UnsupportedClass = 4,
    ClassExit = 5,
    NullPointer = 6,
    Panic = 7,
}

/// Opaque simulated trajectory.
pub struct RdTrajectory {
    inner: Trajectory<f64>,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RdConstants {
    pub t0: f64,
    pub period: f64,
    pub theta_star: f64,
    pub tau_star: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdVariant {
    PeriodicX0 = 0,
    PeriodicY0 = 1,
    ExitsClass = 2,
}

/// `shift` and `settle_time` are set for `PeriodicX0`, `at_iterate` for
/// `ExitsClass`; unused fields are zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdClassification {
    pub variant: RdVariant,
    pub shift: f64,
    pub settle_time: f64,
    pub at_iterate: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RdComplex {
    pub re: f64,
    pub im: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &RelayError) -> RdStatus {
    match err {
        RelayError::EventCap { .. } | RelayError::Overflow(_) => RdStatus::EngineGuard,
        RelayError::UnsupportedClass(_) => RdStatus::UnsupportedClass,
        RelayError::ClassExit(_) => RdStatus::ClassExit,
        RelayError::Io(_) => RdStatus::Io,
        _ => RdStatus::BadInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RdStatus>) -> RdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RdStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            RdStatus::Panic
        }
    }
}

fn fail(err: RelayError) -> RdStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null(name: &str) -> RdStatus {
    set_error(format!("{name} is null"));
    RdStatus::NullPointer
}

fn params(a: f64) -> Result<Params<f64>, RdStatus> {
    Params::new(a).map_err(fail)
}

unsafe fn initial_state(zeros: *const f64, n_zeros: usize, sign_left: i32, x_end: f64) -> Result<InitialState<f64>, RdStatus> {
    let zeros = if n_zeros == 0 {
        Vec::new()
    } else if zeros.is_null() {
        return Err(null("zeros"));
    } else {
        std::slice::from_raw_parts(zeros, n_zeros).to_vec()
    };
    let sign = match sign_left {
        s if s < 0 => Sign::Neg,
        s if s > 0 => Sign::Pos,
        _ => return Err(fail(RelayError::InvalidInitialState("sign_left must be -1 or +1".into()))),
    };
    InitialState::new(zeros, sign, x_end).map_err(fail)
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn rd_default_event_cap() -> usize {
    DEFAULT_EVENT_CAP
}

/// Simulates `x'(t) = R(x(t - 1))` on `[0, horizon]`.
///
/// The initial function is given by its zeros in `[-1, 0]` (increasing), the
/// sign just right of `-1` (`-1` or `+1`) and `x(0)`. `event_cap == 0` selects
/// the default cap.
///
/// # Safety
/// `zeros` must point to `n_zeros` readable doubles (or be null when
/// `n_zeros == 0`); `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rd_simulate(
    a: f64,
    zeros: *const f64,
    n_zeros: usize,
    sign_left: i32,
    x_end: f64,
    horizon: f64,
    event_cap: usize,
    out: *mut *mut RdTrajectory,
) -> RdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = params(a)?;
        let init = initial_state(zeros, n_zeros, sign_left, x_end)?;
        let cap = if event_cap == 0 { DEFAULT_EVENT_CAP } else { event_cap };
        let inner = simulate_with(&init, &p, &horizon, &SimulateOptions { event_cap: cap }).map_err(fail)?;
        *out = Box::into_raw(Box::new(RdTrajectory { inner }));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle from [`rd_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_trajectory_free(traj: *mut RdTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of breakpoints.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_trajectory_len(traj: *const RdTrajectory, out: *mut usize) -> RdStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = traj.inner.breakpoints().len();
        Ok(())
    })
}

/// Copies up to `capacity` breakpoints into `t` and `x`; `written` receives
/// the number copied.
///
/// # Safety
/// `traj` must be a live handle; `t` and `x` must each hold `capacity`
/// doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_trajectory_breakpoints(
    traj: *const RdTrajectory,
    t: *mut f64,
    x: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> RdStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        let written = written.as_mut().ok_or_else(|| null("written"))?;
        let n = capacity.min(traj.inner.breakpoints().len());
        if n > 0 && (t.is_null() || x.is_null()) {
            return Err(null("t or x"));
        }
        for (i, (ti, xi)) in traj.inner.points().take(n).enumerate() {
            *t.add(i) = *ti;
            *x.add(i) = *xi;
        }
        *written = n;
        Ok(())
    })
}

/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_trajectory_eval(traj: *const RdTrajectory, t: f64, out: *mut f64) -> RdStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = traj.inner.eval(&t).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_constants(a: f64, out: *mut RdConstants) -> RdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = constants(&params(a)?);
        *out = RdConstants { t0: c.t0, period: c.period, theta_star: c.theta_star, tau_star: c.tau_star };
        Ok(())
    })
}

/// One application of the return map to `(theta, tau)`. Fails with
/// `ClassExit` if the pair is not admissible.
///
/// # Safety
/// `theta_out` and `tau_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_phi_map(a: f64, theta: f64, tau: f64, theta_out: *mut f64, tau_out: *mut f64) -> RdStatus {
    guard(|| {
        let theta_out = theta_out.as_mut().ok_or_else(|| null("theta_out"))?;
        let tau_out = tau_out.as_mut().ok_or_else(|| null("tau_out"))?;
        let p = params(a)?;
        let pair = PoincarePair::new(theta, tau).map_err(fail)?;
        let next = phi_map(&pair, &p).map_err(fail)?;
        *theta_out = next.theta;
        *tau_out = next.tau;
        Ok(())
    })
}

/// Classifies the initial function (same encoding as [`rd_simulate`]) by
/// simulating up to `horizon`.
///
/// # Safety
/// As for [`rd_simulate`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_classify(
    a: f64,
    zeros: *const f64,
    n_zeros: usize,
    sign_left: i32,
    x_end: f64,
    horizon: f64,
    out: *mut RdClassification,
) -> RdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = params(a)?;
        let init = initial_state(zeros, n_zeros, sign_left, x_end)?;
        let c = classify(&init, &p, &horizon).map_err(fail)?;
        *out = match c.kind {
            ClassKind::PeriodicX0 { shift, settle_time } => {
                RdClassification { variant: RdVariant::PeriodicX0, shift, settle_time, at_iterate: 0 }
            }
            ClassKind::PeriodicY0 => RdClassification { variant: RdVariant::PeriodicY0, shift: 0.0, settle_time: 0.0, at_iterate: 0 },
            ClassKind::ExitsClass { at_iterate } => {
                RdClassification { variant: RdVariant::ExitsClass, shift: 0.0, settle_time: 0.0, at_iterate }
            }
        };
        Ok(())
    })
}

/// Multipliers `1, +i sqrt(T0), -i sqrt(T0)` of the short cycle and their
/// largest modulus.
///
/// # Safety
/// `out` must hold three `RdComplex`; `max_modulus` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_multipliers(a: f64, out: *mut RdComplex, max_modulus: *mut f64) -> RdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let max_modulus = max_modulus.as_mut().ok_or_else(|| null("max_modulus"))?;
        let m = multipliers(&params(a)?);
        for (i, z) in m.values.iter().enumerate() {
            *out.add(i) = RdComplex { re: z.re, im: z.im };
        }
        *max_modulus = m.max_modulus;
        Ok(())
    })
}
