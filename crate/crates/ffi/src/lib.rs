//! C ABI over `twophase-core`.
//!
//! A `TpSolver` owns fluid parameters, derived constants and a frequency
//! calibration. Every function returns a `TpStatus`; on failure the message
//! of the last error on the calling thread is available through
//! `tp_last_error_message`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twophase_core::kernels::{BandMask, Probe, SpectralEvaluator, SpectralOptions};
use twophase_core::roots::{calibrate, find_roots, FrequencyCalibration};
use twophase_core::symbols::{derive_constants, eval_core_at, DerivedConstants, FluidParams, Side};
use twophase_core::{Error, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    /// Null pointer, bad length or out-of-range scalar.
    InvalidArgument = 1,
    InvalidParams = 2,
    DegenerateSymbol = 3,
    QuadratureFailure = 4,
    RootFailure = 5,
    CalibrationFailure = 6,
    NumericalFailure = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpSide {
    /// Upper fluid, `x_N > 0`.
    Plus = 0,
    /// Lower fluid, `x_N < 0`.
    Minus = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpFluids {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub sigma: f64,
    pub gravity: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for TpComplex {
    fn from(z: C64) -> Self {
        TpComplex { re: z.re, im: z.im }
    }
}

impl From<TpComplex> for C64 {
    fn from(z: TpComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

/// Opaque solver handle.
pub struct TpSolver {
    params: FluidParams,
    consts: DerivedConstants,
    cal: FrequencyCalibration,
    opts: SpectralOptions,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TpStatus {
    match e {
        Error::InvalidParams(_) | Error::HypothesisViolation(_) | Error::Config(_) | Error::BranchCutViolation { .. } => {
            TpStatus::InvalidParams
        }
        Error::DegenerateSymbol { .. } => TpStatus::DegenerateSymbol,
        Error::QuadratureFailure(_) => TpStatus::QuadratureFailure,
        Error::NoConvergence { .. } | Error::RootEscapedRegion { .. } => TpStatus::RootFailure,
        Error::CalibrationFailure(_) => TpStatus::CalibrationFailure,
        _ => TpStatus::NumericalFailure,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), TpStatus>>(f: F) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TpStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            TpStatus::Panic
        }
    }
}

fn core<T>(r: twophase_core::Result<T>) -> Result<T, TpStatus> {
    r.map_err(|e| {
        set_error(format!("{}: {e}", e.kind()));
        status_of(&e)
    })
}

fn bad(msg: &str) -> TpStatus {
    set_error(msg.to_string());
    TpStatus::InvalidArgument
}

unsafe fn solver_ref<'a>(s: *const TpSolver) -> Result<&'a TpSolver, TpStatus> {
    s.as_ref().ok_or_else(|| bad("null solver"))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, TpStatus> {
    p.as_mut().ok_or_else(|| bad("null output pointer"))
}

unsafe fn xi_slice<'a>(xi: *const f64, dim: usize) -> Result<&'a [f64], TpStatus> {
    if xi.is_null() || dim == 0 || dim > 2 {
        return Err(bad("xi must be non-null with 1 or 2 entries"));
    }
    Ok(std::slice::from_raw_parts(xi, dim))
}

/// Create a solver for the given fluids and calibrate its frequency bands up
/// to `a_max`. On success `*out` owns the handle; release it with
/// `tp_solver_free`.
///
/// # Safety
/// `fluids` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tp_solver_new(fluids: *const TpFluids, a_max: f64, out: *mut *mut TpSolver) -> TpStatus {
    guard(|| {
        let f = fluids.as_ref().ok_or_else(|| bad("null fluids"))?;
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        if !(a_max.is_finite() && a_max > 0.0) {
            return Err(bad("a_max must be positive"));
        }
        let params = core(FluidParams::new(
            f.rho_plus, f.rho_minus, f.mu_plus, f.mu_minus, f.sigma, f.gravity,
        ))?;
        let consts = core(derive_constants(&params, None))?;
        let cal = core(calibrate(&params, &consts, a_max))?;
        *out = Box::into_raw(Box::new(TpSolver {
            params,
            consts,
            cal,
            opts: SpectralOptions::default(),
        }));
        Ok(())
    })
}

/// Release a solver. Null is ignored.
///
/// # Safety
/// `solver` must come from `tp_solver_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tp_solver_free(solver: *mut TpSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Contour quadrature tolerance relative to the data magnitude.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tp_solver_set_tolerance(solver: *mut TpSolver, rel_tol: f64) -> TpStatus {
    guard(|| {
        let s = solver.as_mut().ok_or_else(|| bad("null solver"))?;
        if !(rel_tol.is_finite() && rel_tol > 0.0) {
            return Err(bad("tolerance must be positive"));
        }
        s.opts.rel_tol = rel_tol;
        Ok(())
    })
}

/// Low and high band cutoffs.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_solver_cutoffs(solver: *const TpSolver, a0: *mut f64, a_inf: *mut f64) -> TpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        *out_ref(a0)? = s.cal.a0;
        *out_ref(a_inf)? = s.cal.a_inf;
        Ok(())
    })
}

/// Boundary symbol `L(A, λ)`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_symbol_l(solver: *const TpSolver, a: f64, lambda: TpComplex, out: *mut TpComplex) -> TpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let out = out_ref(out)?;
        *out = core(eval_core_at(&s.params, &s.consts, a, lambda.into()))?.l.into();
        Ok(())
    })
}

/// The two slow roots `λ±(A)` for `0 < A`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_roots(
    solver: *const TpSolver,
    a: f64,
    plus: *mut TpComplex,
    minus: *mut TpComplex,
) -> TpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let (p, m) = (out_ref(plus)?, out_ref(minus)?);
        let r = core(find_roots(&s.params, &s.consts, a))?;
        *p = r.lambda_plus.into();
        *m = r.lambda_minus.into();
        Ok(())
    })
}

/// Height transform `η̂(ξ′, t)` for initial height transform `d_hat`, all
/// bands, no body force. `dim` is `N − 1`.
///
/// # Safety
/// `xi` must point to `dim` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_eta_hat(
    solver: *const TpSolver,
    xi: *const f64,
    dim: usize,
    d_hat: TpComplex,
    t: f64,
    out: *mut TpComplex,
) -> TpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let xi = xi_slice(xi, dim)?;
        let out = out_ref(out)?;
        if !(t.is_finite() && t > 0.0) {
            return Err(bad("t must be positive"));
        }
        let ev = core(SpectralEvaluator::new(&s.params, &s.consts, &s.cal, s.opts))?;
        *out = core(ev.evaluate(xi, d_hat.into(), None, BandMask::default(), t, &[]))?.eta.into();
        Ok(())
    })
}

/// Velocity transform `û(ξ′, x_N, t)` (`dim + 1` components, normal last)
/// and the interface-driven pressure at one normal position.
///
/// # Safety
/// `xi` must point to `dim` doubles and `u_out` to `dim + 1` writable
/// values; `p_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn tp_velocity_hat(
    solver: *const TpSolver,
    xi: *const f64,
    dim: usize,
    d_hat: TpComplex,
    t: f64,
    side: TpSide,
    x_n: f64,
    u_out: *mut TpComplex,
    p_out: *mut TpComplex,
) -> TpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let xi = xi_slice(xi, dim)?;
        if u_out.is_null() {
            return Err(bad("null velocity output"));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(bad("t must be positive"));
        }
        let sd = match side {
            TpSide::Plus => Side::Plus,
            TpSide::Minus => Side::Minus,
        };
        let probe = core(Probe::new(sd, x_n))?;
        let ev = core(SpectralEvaluator::new(&s.params, &s.consts, &s.cal, s.opts))?;
        let v = core(ev.evaluate(xi, d_hat.into(), None, BandMask::default(), t, &[probe]))?;
        let u = std::slice::from_raw_parts_mut(u_out, dim + 1);
        for (o, z) in u.iter_mut().zip(&v.u[0]) {
            *o = (*z).into();
        }
        if let Some(p) = p_out.as_mut() {
            *p = v.p[0].into();
        }
        Ok(())
    })
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn tp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn tp_status_name(status: TpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TpStatus::Ok => c"ok",
        TpStatus::InvalidArgument => c"invalid_argument",
        TpStatus::InvalidParams => c"invalid_params",
        TpStatus::DegenerateSymbol => c"degenerate_symbol",
        TpStatus::QuadratureFailure => c"quadrature_failure",
        TpStatus::RootFailure => c"root_failure",
        TpStatus::CalibrationFailure => c"calibration_failure",
        TpStatus::NumericalFailure => c"numerical_failure",
        TpStatus::Panic => c"panic",
    };
    s.as_ptr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_statuses() {
        assert_eq!(status_of(&Error::QuadratureFailure("x".into())), TpStatus::QuadratureFailure);
        assert_eq!(
            status_of(&Error::NoConvergence {
                a: 0.1,
                iterate: C64::new(0.0, 0.0)
            }),
            TpStatus::RootFailure
        );
        assert_eq!(status_of(&Error::InvalidParams("x".into())), TpStatus::InvalidParams);
    }

    #[test]
    fn panics_become_a_status() {
        assert_eq!(guard(|| panic!("boom")), TpStatus::Panic);
        let mut buf = [0 as c_char; 32];
        let n = unsafe { tp_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, "panic: boom".len());
    }
}
