//! Boundary symbols of the two-phase resolvent problem at a single point `(ξ', λ)`.
//!
//! Notation: `A = |ξ'|`, `B± = sqrt(ρ±λ/μ± + A²)` on the principal branch,
//! `D± = μ±B± + μ∓A`, `E = μ₊B₊ + μ₋B₋`. The boundary symbol is
//! `L = λF + A(ω + σA²)(D₊ + D₋)` and its normalized form `𝓛_A` satisfies
//! `L = (ρ₊ + ρ₋)(D₊ + D₋)𝓛_A`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub sigma: f64,
    pub gravity: f64,
}

impl FluidParams {
    pub fn new(
        rho_plus: f64,
        rho_minus: f64,
        mu_plus: f64,
        mu_minus: f64,
        sigma: f64,
        gravity: f64,
    ) -> Result<Self> {
        let p = FluidParams {
            rho_plus,
            rho_minus,
            mu_plus,
            mu_minus,
            sigma,
            gravity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho_plus", self.rho_plus),
            ("rho_minus", self.rho_minus),
            ("mu_plus", self.mu_plus),
            ("mu_minus", self.mu_minus),
            ("sigma", self.sigma),
            ("gravity", self.gravity),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Heavier fluid below the interface.
    pub fn stable_regime(&self) -> bool {
        self.rho_minus > self.rho_plus
    }

    pub fn rho(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.rho_plus,
            Side::Minus => self.rho_minus,
        }
    }

    pub fn mu(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.mu_plus,
            Side::Minus => self.mu_minus,
        }
    }
}

impl Default for FluidParams {
    fn default() -> Self {
        FluidParams {
            rho_plus: 1.0,
            rho_minus: 2.0,
            mu_plus: 1.0,
            mu_minus: 1.0,
            sigma: 1.0,
            gravity: 3.0,
        }
    }
}

/// Fluid side: `Plus` is the upper half space `x_N > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Plus => "+",
            Side::Minus => "-",
        }
    }
}

pub const DEFAULT_LAMBDA1: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub z0: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tilde_sigma: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub lambda1: f64,
}

impl DerivedConstants {
    /// Anchor of the right-most contour on the positive real axis.
    pub fn gamma0_anchor(&self) -> f64 {
        2.0 * self.lambda1 / self.theta1.sin()
    }
}

pub fn theta(j: u32) -> f64 {
    (j as f64 / 16.0).atan()
}

pub fn derive_constants(params: &FluidParams, lambda1_override: Option<f64>) -> Result<DerivedConstants> {
    params.validate()?;
    let lambda1 = match lambda1_override {
        Some(v) if v.is_finite() && v > 0.0 => v,
        Some(v) => return Err(Error::InvalidParams(format!("lambda1 must be positive, got {v}"))),
        None => DEFAULT_LAMBDA1,
    };
    let FluidParams {
        rho_plus: rp,
        rho_minus: rm,
        mu_plus: mp,
        mu_minus: mm,
        sigma,
        gravity,
    } = *params;
    let omega = (rm - rp) * gravity;
    let sp = (rp * mp).sqrt();
    let sm = (rm * mm).sqrt();
    Ok(DerivedConstants {
        z0: (mp / rp).min(mm / rm),
        omega,
        alpha: omega / (rp + rm),
        beta: sp * sm / ((rp + rm) * (sp + sm)),
        tilde_sigma: sigma / (rp + rm),
        theta1: theta(1),
        theta2: theta(2),
        lambda1,
    })
}

/// Principal square root with `Re > 0`, cut along `(-inf, 0]`.
pub fn branch_sqrt(z: C64) -> Result<C64> {
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::BranchCutViolation { z });
    }
    Ok(z.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPoint {
    pub a: f64,
    pub xi: Option<Vec<f64>>,
    pub lambda: C64,
}

impl SymbolPoint {
    pub fn new(a: f64, lambda: C64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidParams(format!("A must be nonnegative, got {a}")));
        }
        if a == 0.0 && lambda == C64::new(0.0, 0.0) {
            return Err(Error::InvalidParams("A = 0 and lambda = 0 together".into()));
        }
        Ok(SymbolPoint { a, xi: None, lambda })
    }

    pub fn with_xi(xi: &[f64], lambda: C64) -> Result<Self> {
        let a = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut p = SymbolPoint::new(a, lambda)?;
        p.xi = Some(xi.to_vec());
        Ok(p)
    }

    /// Dimension `N` implied by the tangential vector, if present.
    pub fn dim(&self) -> Option<usize> {
        self.xi.as_ref().map(|x| x.len() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreSymbols {
    pub a: f64,
    pub lambda: C64,
    pub b_plus: C64,
    pub b_minus: C64,
    pub d_plus: C64,
    pub d_minus: C64,
    pub e: C64,
    pub l11: C64,
    pub l12: C64,
    pub l21: C64,
    pub l22: C64,
    pub f: C64,
    pub l: C64,
    pub script_l: C64,
    pub script_f: C64,
    pub script_g: C64,
}

impl CoreSymbols {
    pub fn b(&self, side: Side) -> C64 {
        match side {
            Side::Plus => self.b_plus,
            Side::Minus => self.b_minus,
        }
    }

    pub fn d(&self, side: Side) -> C64 {
        match side {
            Side::Plus => self.d_plus,
            Side::Minus => self.d_minus,
        }
    }
}

/// λ-derivatives of the symbols needed by Newton iteration and residues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolDerivatives {
    pub db_plus: C64,
    pub db_minus: C64,
    pub df: C64,
    pub dl: C64,
    pub dscript_l: C64,
}

pub fn eval_core(params: &FluidParams, consts: &DerivedConstants, point: &SymbolPoint) -> Result<CoreSymbols> {
    eval_core_at(params, consts, point.a, point.lambda)
}

/// Same as [`eval_core`] without building a [`SymbolPoint`].
pub fn eval_core_at(params: &FluidParams, consts: &DerivedConstants, a: f64, lambda: C64) -> Result<CoreSymbols> {
    let FluidParams {
        rho_plus: rp,
        rho_minus: rm,
        mu_plus: mp,
        mu_minus: mm,
        sigma,
        ..
    } = *params;
    let a2 = a * a;
    let bp = branch_sqrt(lambda * (rp / mp) + a2)?;
    let bm = branch_sqrt(lambda * (rm / mm) + a2)?;

    let d_plus = bp * mp + mm * a;
    let d_minus = bm * mm + mp * a;
    let e = bp * mp + bm * mm;

    let l11 = bp * mp * (bp + a) + bm * mm * (bm + a);
    let l12 = (bp - a) * (mp * a) - (bm - a) * (mm * a);
    let l21 = (bp - a) * mp - (bm - a) * mm;
    let l22 = (bp + a) * mp + (bm + a) * mm;

    let dmu = mp - mm;
    let f = -dmu * dmu * a2 * a
        + (bp * ((3.0 * mp - mm) * mp) + bm * ((3.0 * mm - mp) * mm)) * a2
        + (e * e + (bp + bm) * (bp + bm) * (mp * mm)) * a
        + e * (bp * bp * mp + bm * bm * mm);

    let restoring = a * (consts.omega + sigma * a2);
    let l = lambda * f + (d_plus + d_minus) * restoring;

    let damping = d_plus * d_minus * (4.0 * a) / ((d_plus + d_minus) * (rp + rm));
    let script_l = lambda * lambda + damping * lambda + consts.alpha * a + consts.tilde_sigma * a2 * a;

    let (zp, zm) = zeta_c(consts, a);
    let script_f = (lambda - zp) * (lambda - zm);
    let script_g = script_l - script_f;

    Ok(CoreSymbols {
        a,
        lambda,
        b_plus: bp,
        b_minus: bm,
        d_plus,
        d_minus,
        e,
        l11,
        l12,
        l21,
        l22,
        f,
        l,
        script_l,
        script_f,
        script_g,
    })
}

/// Symbols together with their λ-derivatives.
pub fn eval_core_with_derivatives(
    params: &FluidParams,
    consts: &DerivedConstants,
    a: f64,
    lambda: C64,
) -> Result<(CoreSymbols, SymbolDerivatives)> {
    let s = eval_core_at(params, consts, a, lambda)?;
    let FluidParams {
        rho_plus: rp,
        rho_minus: rm,
        mu_plus: mp,
        mu_minus: mm,
        sigma,
        ..
    } = *params;
    let (bp, bm) = (s.b_plus, s.b_minus);
    let dbp = (rp / mp) / (bp * 2.0);
    let dbm = (rm / mm) / (bm * 2.0);
    let a2 = a * a;
    let e = s.e;
    let de = dbp * mp + dbm * mm;
    let df = (dbp * ((3.0 * mp - mm) * mp) + dbm * ((3.0 * mm - mp) * mm)) * a2
        + (e * de * 2.0 + (bp + bm) * (dbp + dbm) * (2.0 * mp * mm)) * a
        + de * (bp * bp * mp + bm * bm * mm)
        + e * (bp * dbp * (2.0 * mp) + bm * dbm * (2.0 * mm));
    let ddp = dbp * mp;
    let ddm = dbm * mm;
    let restoring = a * (consts.omega + sigma * a2);
    let dl = s.f + s.lambda * df + (ddp + ddm) * restoring;

    let (dp, dm) = (s.d_plus, s.d_minus);
    let sum = dp + dm;
    let c = dp * dm * (4.0 * a) / (sum * (rp + rm));
    let dc = (ddp * dm * dm + ddm * dp * dp) * (4.0 * a) / (sum * sum * (rp + rm));
    let dscript_l = s.lambda * 2.0 + c + dc * s.lambda;

    Ok((
        s,
        SymbolDerivatives {
            db_plus: dbp,
            db_minus: dbm,
            df,
            dl,
            dscript_l,
        },
    ))
}

fn zeta_c(consts: &DerivedConstants, a: f64) -> (C64, C64) {
    if a == 0.0 {
        return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    }
    let al = C64::new(consts.alpha, 0.0);
    let sqrt_al = al.sqrt();
    let quart_al = sqrt_al.sqrt();
    let i = C64::i();
    let k = quart_al * (2f64.sqrt() * consts.beta * a.powf(1.25));
    let osc = i * sqrt_al * a.sqrt();
    let zp = osc - k * C64::new(1.0, 1.0);
    let zm = -osc - k * C64::new(1.0, -1.0);
    (zp, zm)
}

/// Two-term small-frequency approximations `ζ±` of the slow roots.
pub fn zeta(consts: &DerivedConstants, a: f64) -> (C64, C64) {
    zeta_c(consts, a)
}

fn phi_exp(z: C64) -> C64 {
    // (e^z - 1)/z
    if z.norm() < 1e-3 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..8 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `(e^{-Ax} - e^{-Bx}) / (A - B)`, written as `−x e^{−Ax}(e^z − 1)/z` with
/// `z = (A − B)x` when `|z| ≤ 1` to avoid cancellation.
pub fn m_kernel(a: f64, b: C64, x: f64) -> C64 {
    let diff = C64::new(a, 0.0) - b;
    let z = diff * x;
    if z.norm() <= 1.0 {
        -(x * (-a * x).exp()) * phi_exp(z)
    } else {
        (C64::new((-a * x).exp(), 0.0) - (-b * x).exp()) / diff
    }
}

/// [`m_kernel`] and its x-derivative from precomputed `e^{−Ax}`, `e^{−Bx}`.
pub fn m_kernel_pair(a: f64, b: C64, x: f64, ea: f64, eb: C64) -> (C64, C64) {
    let diff = C64::new(a, 0.0) - b;
    let z = diff * x;
    let m = if z.norm() <= 1.0 {
        -(x * ea) * phi_exp(z)
    } else {
        (C64::new(ea, 0.0) - eb) / diff
    };
    (m, -eb - m * a)
}

/// x-derivative of [`m_kernel`].
pub fn m_kernel_dx(a: f64, b: C64, x: f64) -> C64 {
    // d/dx = (-A e^{-Ax} + B e^{-Bx}) / (A - B) = -e^{-Bx} - A·M(x)
    -(-b * x).exp() - m_kernel(a, b, x) * a
}

pub fn eval_m(params: &FluidParams, point: &SymbolPoint, x: f64) -> Result<(C64, C64)> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParams(format!("M kernel needs a >= 0, got {x}")));
    }
    let a2 = point.a * point.a;
    let bp = branch_sqrt(point.lambda * (params.rho_plus / params.mu_plus) + a2)?;
    let bm = branch_sqrt(point.lambda * (params.rho_minus / params.mu_minus) + a2)?;
    Ok((m_kernel(point.a, bp, x), m_kernel(point.a, bm, x)))
}

/// Numerators of the hyperbolic velocity formula: `𝓘_{m±}`, `𝓙_m`, indexed
/// `0..N-1` with the last entry the normal component.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSymbols {
    pub a: f64,
    pub b_plus: C64,
    pub b_minus: C64,
    pub i_plus: Vec<C64>,
    pub i_minus: Vec<C64>,
    pub j: Vec<C64>,
}

impl KernelSymbols {
    pub fn m_plus(&self, x: f64) -> C64 {
        m_kernel(self.a, self.b_plus, x)
    }

    pub fn m_minus(&self, x: f64) -> C64 {
        m_kernel(self.a, self.b_minus, x)
    }

    pub fn i(&self, side: Side) -> &[C64] {
        match side {
            Side::Plus => &self.i_plus,
            Side::Minus => &self.i_minus,
        }
    }
}

pub fn eval_kernel_symbols(
    params: &FluidParams,
    consts: &DerivedConstants,
    point: &SymbolPoint,
) -> Result<KernelSymbols> {
    let xi = point
        .xi
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("kernel symbols need the tangential vector".into()))?;
    if point.a <= 0.0 {
        return Err(Error::InvalidParams("kernel symbols need A > 0".into()));
    }
    let s = eval_core(params, consts, point)?;
    Ok(kernel_symbols_from_core(params, consts, &s, xi))
}

pub fn kernel_symbols_from_core(params: &FluidParams, consts: &DerivedConstants, s: &CoreSymbols, xi: &[f64]) -> KernelSymbols {
    let a = s.a;
    let r = consts.omega + params.sigma * a * a;
    let i = C64::i();
    let fp = s.l12 - s.b_plus * s.l22;
    let fm = s.l12 + s.b_minus * s.l22;
    let jt = -((params.mu_plus + params.mu_minus) * s.l12
        + ((a - s.b_plus) * params.mu_plus - (a - s.b_minus) * params.mu_minus) * s.l22)
        * r;
    let n = xi.len() + 1;
    let mut ip = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    let mut jv = Vec::with_capacity(n);
    for &x in xi {
        ip.push(i * x * r * fp);
        im.push(i * x * r * fm);
        jv.push(i * x * jt);
    }
    ip.push(-fp * (a * r));
    im.push(fm * (a * r));
    jv.push(-s.e * s.l22 * (a * r));
    KernelSymbols {
        a,
        b_plus: s.b_plus,
        b_minus: s.b_minus,
        i_plus: ip,
        i_minus: im,
        j: jv,
    }
}
