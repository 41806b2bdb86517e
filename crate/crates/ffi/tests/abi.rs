use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use twophase_ffi::*;

fn defaults() -> TpFluids {
    TpFluids {
        rho_plus: 1.0,
        rho_minus: 2.0,
        mu_plus: 1.0,
        mu_minus: 1.0,
        sigma: 1.0,
        gravity: 3.0,
    }
}

struct Handle(*mut TpSolver);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { tp_solver_free(self.0) }
    }
}

fn solver() -> Handle {
    let mut s = ptr::null_mut();
    let st = unsafe { tp_solver_new(&defaults(), 8.0, &mut s) };
    assert_eq!(st, TpStatus::Ok);
    assert!(!s.is_null());
    Handle(s)
}

fn zero() -> TpComplex {
    TpComplex { re: 0.0, im: 0.0 }
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        tp_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn solver_lifecycle_and_cutoffs() {
    let s = solver();
    let (mut a0, mut ai) = (0.0, 0.0);
    assert_eq!(unsafe { tp_solver_cutoffs(s.0, &mut a0, &mut ai) }, TpStatus::Ok);
    assert!(a0 > 0.0 && a0 < 1.0 && ai >= 2.0);
    unsafe { tp_solver_free(ptr::null_mut()) };
}

#[test]
fn roots_are_conjugate_zeros_of_the_symbol() {
    let s = solver();
    let (mut p, mut m) = (zero(), zero());
    assert_eq!(unsafe { tp_roots(s.0, 0.05, &mut p, &mut m) }, TpStatus::Ok);
    assert!((p.re - m.re).abs() < 1e-12 && (p.im + m.im).abs() < 1e-12);
    assert!(p.re < 0.0 && p.im > 0.0);
    // L vanishes at the root relative to its size nearby.
    let mut at = zero();
    let mut near = zero();
    unsafe {
        assert_eq!(tp_symbol_l(s.0, 0.05, p, &mut at), TpStatus::Ok);
        let off = TpComplex { re: p.re + 0.01, im: p.im };
        assert_eq!(tp_symbol_l(s.0, 0.05, off, &mut near), TpStatus::Ok);
    }
    assert!(at.re.hypot(at.im) < 1e-9 * near.re.hypot(near.im));
}

#[test]
fn height_and_velocity_agree_across_calls() {
    let s = solver();
    let xi = [0.3];
    let d = TpComplex { re: 1.0, im: 0.0 };
    let mut eta = zero();
    assert_eq!(unsafe { tp_eta_hat(s.0, xi.as_ptr(), 1, d, 2.0, &mut eta) }, TpStatus::Ok);
    assert!(eta.re.is_finite() && eta.re.abs() < 1.0);
    // Velocity is continuous across the interface.
    let mut up = [zero(); 2];
    let mut um = [zero(); 2];
    let mut pp = zero();
    unsafe {
        assert_eq!(
            tp_velocity_hat(s.0, xi.as_ptr(), 1, d, 2.0, TpSide::Plus, 0.0, up.as_mut_ptr(), &mut pp),
            TpStatus::Ok
        );
        assert_eq!(
            tp_velocity_hat(s.0, xi.as_ptr(), 1, d, 2.0, TpSide::Minus, 0.0, um.as_mut_ptr(), ptr::null_mut()),
            TpStatus::Ok
        );
    }
    for (a, b) in up.iter().zip(&um) {
        let scale = a.re.hypot(a.im).max(1e-300);
        assert!((a.re - b.re).hypot(a.im - b.im) <= 1e-8 * scale);
    }
    // The kinematic relation at a centred difference.
    let h = 1e-3;
    let (mut ep, mut em) = (zero(), zero());
    unsafe {
        tp_eta_hat(s.0, xi.as_ptr(), 1, d, 2.0 + h, &mut ep);
        tp_eta_hat(s.0, xi.as_ptr(), 1, d, 2.0 - h, &mut em);
    }
    let dre = (ep.re - em.re) / (2.0 * h);
    assert!((dre - up[1].re).abs() < 1e-5 * up[1].re.abs().max(1e-3));
}

#[test]
fn bad_input_reports_status_and_message() {
    let mut s = ptr::null_mut();
    let mut f = defaults();
    f.rho_plus = -1.0;
    assert_eq!(unsafe { tp_solver_new(&f, 8.0, &mut s) }, TpStatus::InvalidParams);
    assert!(s.is_null());
    assert!(last_error().starts_with("InvalidParams"), "{}", last_error());
    assert_eq!(unsafe { tp_solver_new(ptr::null(), 8.0, &mut s) }, TpStatus::InvalidArgument);

    let h = solver();
    let mut out = zero();
    let xi = [0.3, 0.1, 0.2];
    let d = TpComplex { re: 1.0, im: 0.0 };
    assert_eq!(unsafe { tp_eta_hat(h.0, xi.as_ptr(), 3, d, 1.0, &mut out) }, TpStatus::InvalidArgument);
    assert_eq!(unsafe { tp_eta_hat(h.0, xi.as_ptr(), 1, d, -1.0, &mut out) }, TpStatus::InvalidArgument);
    assert_eq!(unsafe { tp_eta_hat(h.0, xi.as_ptr(), 1, d, 1.0, ptr::null_mut()) }, TpStatus::InvalidArgument);
    let mut u = [zero(); 2];
    // A probe on the wrong side of the interface.
    assert_eq!(
        unsafe { tp_velocity_hat(h.0, xi.as_ptr(), 1, d, 1.0, TpSide::Plus, -0.5, u.as_mut_ptr(), ptr::null_mut()) },
        TpStatus::InvalidParams
    );
    assert_eq!(unsafe { tp_solver_set_tolerance(h.0, 0.0) }, TpStatus::InvalidArgument);
}

#[test]
fn status_names_are_static_strings() {
    let name = |s| unsafe { CStr::from_ptr(tp_status_name(s)).to_str().unwrap() };
    assert_eq!(name(TpStatus::Ok), "ok");
    assert_eq!(name(TpStatus::RootFailure), "root_failure");
    assert_eq!(name(TpStatus::Panic), "panic");
}

#[test]
fn header_declares_every_export() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/twophase.h");
    let header = std::fs::read_to_string(&path).unwrap();
    for f in [
        "tp_solver_new",
        "tp_solver_free",
        "tp_solver_set_tolerance",
        "tp_solver_cutoffs",
        "tp_symbol_l",
        "tp_roots",
        "tp_eta_hat",
        "tp_velocity_hat",
        "tp_last_error_message",
        "tp_status_name",
        "TP_STATUS_QUADRATURE_FAILURE",
        "typedef struct TpSolver TpSolver",
    ] {
        assert!(header.contains(f), "header lacks {f}");
    }
    // Syntax check with the system C compiler when one is present.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&path).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
