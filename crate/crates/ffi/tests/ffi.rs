use std::ffi::CStr;
use std::ptr;

use relaydelay_ffi::*;

fn last_error() -> String {
    let p = rd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn simulate(a: f64, zeros: &[f64], sign: i32, x_end: f64, horizon: f64) -> (RdStatus, *mut RdTrajectory) {
    let mut out = ptr::null_mut();
    let s = unsafe { rd_simulate(a, zeros.as_ptr(), zeros.len(), sign, x_end, horizon, 0, &mut out) };
    (s, out)
}

#[test]
fn simulate_x0_breakpoints() {
    let (s, traj) = simulate(1.0, &[0.0], -1, 0.0, 8.0);
    assert_eq!(s, RdStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { rd_trajectory_len(traj, &mut n) }, RdStatus::Ok);
    let mut t = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut written = 0;
    assert_eq!(unsafe { rd_trajectory_breakpoints(traj, t.as_mut_ptr(), x.as_mut_ptr(), n, &mut written) }, RdStatus::Ok);
    assert_eq!(written, n);
    assert_eq!(t, [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
    assert_eq!(x, [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0]);
    let mut v = 0.0;
    assert_eq!(unsafe { rd_trajectory_eval(traj, 2.5, &mut v) }, RdStatus::Ok);
    assert_eq!(v, -0.5);
    assert_eq!(unsafe { rd_trajectory_eval(traj, 9.0, &mut v) }, RdStatus::BadInput);
    unsafe { rd_trajectory_free(traj) };
}

#[test]
fn partial_copy() {
    let (_, traj) = simulate(2.0, &[0.0], -1, 0.0, 10.0);
    let mut t = [0.0; 2];
    let mut x = [0.0; 2];
    let mut written = 0;
    assert_eq!(unsafe { rd_trajectory_breakpoints(traj, t.as_mut_ptr(), x.as_mut_ptr(), 2, &mut written) }, RdStatus::Ok);
    assert_eq!(written, 2);
    assert_eq!((t, x), ([0.0, 1.0], [0.0, 1.0]));
    unsafe { rd_trajectory_free(traj) };
}

#[test]
fn error_codes_and_messages() {
    let (s, traj) = simulate(-1.0, &[0.0], -1, 0.0, 1.0);
    assert_eq!(s, RdStatus::BadInput);
    assert!(traj.is_null());
    assert!(last_error().contains("a must be positive"));

    let (s, _) = simulate(1.0, &[0.5], -1, 0.0, 1.0);
    assert_eq!(s, RdStatus::BadInput);

    let (s, _) = simulate(1.0, &[0.0], 0, 0.0, 1.0);
    assert_eq!(s, RdStatus::BadInput);

    let mut out = ptr::null_mut();
    let s = unsafe { rd_simulate(1.0, [0.0].as_ptr(), 1, -1, 0.0, 1000.0, 5, &mut out) };
    assert_eq!(s, RdStatus::EngineGuard);
    assert!(last_error().contains("event cap"));

    assert_eq!(unsafe { rd_simulate(1.0, ptr::null(), 1, -1, 0.0, 1.0, 0, &mut out) }, RdStatus::NullPointer);
    assert_eq!(unsafe { rd_simulate(1.0, ptr::null(), 0, -1, -1.0, 1.0, 0, ptr::null_mut()) }, RdStatus::NullPointer);

    let mut c = RdConstants::default();
    assert_eq!(unsafe { rd_constants(1.0, &mut c) }, RdStatus::Ok);
    assert!(rd_last_error().is_null());
    unsafe { rd_trajectory_free(ptr::null_mut()) };
}

#[test]
fn sign_constant_initial_data_without_zeros() {
    let (s, traj) = simulate(1.0, &[], -1, -0.5, 3.0);
    assert_eq!(s, RdStatus::Ok);
    let mut v = 0.0;
    assert_eq!(unsafe { rd_trajectory_eval(traj, 0.5, &mut v) }, RdStatus::Ok);
    assert_eq!(v, 0.0);
    unsafe { rd_trajectory_free(traj) };
}

#[test]
fn constants_and_fixed_pair() {
    let mut c = RdConstants::default();
    assert_eq!(unsafe { rd_constants(2.0, &mut c) }, RdStatus::Ok);
    assert_eq!(c.t0, 1.5);
    assert_eq!(c.period, 4.5);
    assert!((c.theta_star - 9.0 / 11.0).abs() < 1e-15);
    assert!((c.tau_star - 6.0 / 11.0).abs() < 1e-15);

    let (mut th, mut ta) = (0.0, 0.0);
    assert_eq!(unsafe { rd_phi_map(1.0, 0.8, 0.4, &mut th, &mut ta) }, RdStatus::Ok);
    assert!((th - 0.8).abs() < 1e-12 && (ta - 0.4).abs() < 1e-12);
    assert_eq!(unsafe { rd_phi_map(1.0, 0.7, 0.2, &mut th, &mut ta) }, RdStatus::ClassExit);
}

#[test]
fn classify_and_multipliers() {
    let mut out = RdClassification { variant: RdVariant::ExitsClass, shift: 0.0, settle_time: 0.0, at_iterate: 0 };
    let s = unsafe { rd_classify(1.0, [-0.8, -0.4, 0.0].as_ptr(), 3, -1, 0.0, 10.0, &mut out) };
    assert_eq!(s, RdStatus::Ok);
    assert_eq!(out.variant, RdVariant::PeriodicY0);

    let s = unsafe { rd_classify(1.0, [-0.75, -0.4, 0.0].as_ptr(), 3, -1, 0.0, 40.0, &mut out) };
    assert_eq!(s, RdStatus::Ok);
    assert_eq!(out.variant, RdVariant::PeriodicX0);
    assert!((out.settle_time - 2.9).abs() < 1e-9);

    let zeros = [-0.9, -0.7, -0.5, -0.3];
    let s = unsafe { rd_classify(1.0, zeros.as_ptr(), 4, -1, -0.1, 40.0, &mut out) };
    assert_eq!(s, RdStatus::UnsupportedClass);

    let mut mu = [RdComplex::default(); 3];
    let mut modulus = 0.0;
    assert_eq!(unsafe { rd_multipliers(1.0, mu.as_mut_ptr(), &mut modulus) }, RdStatus::Ok);
    assert_eq!(mu, [RdComplex { re: 1.0, im: 0.0 }, RdComplex { re: 0.0, im: 2.0 }, RdComplex { re: 0.0, im: -2.0 }]);
    assert_eq!(modulus, 2.0);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/relaydelay.h");
    for name in [
        "rd_last_error",
        "rd_simulate",
        "rd_trajectory_free",
        "rd_trajectory_len",
        "rd_trajectory_breakpoints",
        "rd_trajectory_eval",
        "rd_constants",
        "rd_phi_map",
        "rd_classify",
        "rd_multipliers",
        "typedef struct RdTrajectory RdTrajectory",
        "RD_STATUS_UNSUPPORTED_CLASS = 4",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
