//! Transmission problem across the flat interface and whole-space parabolic
//! kernels.
//!
//! The interface problem seeks, on each side, a divergence-free profile
//! `ŵ_{J±}(x_N) = α_{J±}(e^{∓A x_N} − e^{∓B± x_N}) + β_{J±} e^{∓B± x_N}` with
//! pressure `r̂± = γ± e^{∓A x_N}`, matching prescribed stress jump `ĝ` and
//! velocity jump `ĥ` at `x_N = 0`.

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_vec, AdaptiveOptions};
use crate::symbols::{
    eval_core, m_kernel, CoreSymbols, DerivedConstants, FluidParams, Side, SymbolPoint,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn tangential(point: &SymbolPoint) -> Result<&[f64]> {
    let xi = point
        .xi
        .as_deref()
        .ok_or_else(|| Error::InvalidParams("interface solve needs the tangential frequency vector".into()))?;
    if point.a <= 0.0 {
        return Err(Error::InvalidParams("interface solve needs A > 0".into()));
    }
    Ok(xi)
}

pub(crate) fn idot(xi: &[f64], v: &[C64]) -> C64 {
    xi.iter().zip(v).map(|(&x, &z)| C64::new(0.0, x) * z).sum()
}

/// Rejects points where `F(A, λ)` is too small to divide by.
pub fn check_nondegenerate(s: &CoreSymbols) -> Result<()> {
    let scale = (s.lambda.norm().sqrt() + s.a).powi(3);
    if s.f.norm() < 1e-13 * scale {
        return Err(Error::DegenerateSymbol {
            a: s.a,
            lambda: s.lambda,
            magnitude: s.f.norm(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceRhs {
    /// Stress-jump data, `N` components with the normal one last.
    pub g_hat: Vec<C64>,
    /// Velocity-jump data, same layout.
    pub h_hat: Vec<C64>,
    pub g: C64,
    pub h: C64,
}

impl InterfaceRhs {
    pub fn new(params: &FluidParams, s: &CoreSymbols, xi: &[f64], g_hat: Vec<C64>, h_hat: Vec<C64>) -> Result<Self> {
        let n = xi.len() + 1;
        if g_hat.len() != n || h_hat.len() != n {
            return Err(Error::InvalidParams(format!(
                "jump data must have {n} components, got {} and {}",
                g_hat.len(),
                h_hat.len()
            )));
        }
        let (g, h) = reduced_rhs(params, s, xi, &g_hat, &h_hat);
        Ok(InterfaceRhs { g_hat, h_hat, g, h })
    }

    pub fn zero(n: usize) -> Self {
        InterfaceRhs {
            g_hat: vec![ZERO; n],
            h_hat: vec![ZERO; n],
            g: ZERO,
            h: ZERO,
        }
    }
}

/// The reduced right-hand sides `(G, H)` of the 2×2 interface system.
pub fn reduced_rhs(params: &FluidParams, s: &CoreSymbols, xi: &[f64], g_hat: &[C64], h_hat: &[C64]) -> (C64, C64) {
    let n = xi.len();
    let a = s.a;
    let bp = s.b_plus;
    let mp = params.mu_plus;
    let xg = idot(xi, &g_hat[..n]);
    let xh = idot(xi, &h_hat[..n]);
    let g = -xg - (bp + a) * mp * xh + (bp - a) * (mp * a) * h_hat[n];
    let h = -g_hat[n] * a + (bp - a) * mp * xh - bp * (bp + a) * mp * h_hat[n];
    (g, h)
}

/// Coefficients of the profile on one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCoefficients {
    /// `α_{j}`, `j < N`, followed by `α_N`.
    pub alpha: Vec<C64>,
    /// `β_{j}`, `j < N`, followed by `β_N`.
    pub beta: Vec<C64>,
    pub gamma: C64,
    /// `iξ′·α′` as produced by the closed form.
    pub alpha_prime_dot: C64,
    /// `iξ′·β′` as produced by the closed form.
    pub beta_prime_dot: C64,
}

impl SideCoefficients {
    pub fn alpha_n(&self) -> C64 {
        *self.alpha.last().unwrap()
    }

    pub fn beta_n(&self) -> C64 {
        *self.beta.last().unwrap()
    }

    /// Profile `ŵ(x_N)` for `x_N` on this side.
    pub fn profile(&self, a: f64, b: C64, side: Side, x_n: f64) -> Vec<C64> {
        let y = x_n.abs();
        let ea = (-a * y).exp();
        let eb = (-b * y).exp();
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&al, &be)| al * (ea - eb) + be * eb)
            .map(|v| if side.sign() * x_n < 0.0 { ZERO } else { v })
            .collect()
    }

    /// `∂_N ŵ(x_N)` for `x_N` on this side.
    pub fn profile_dx(&self, a: f64, b: C64, side: Side, x_n: f64) -> Vec<C64> {
        let y = x_n.abs();
        let ea = (-a * y).exp();
        let eb = (-b * y).exp();
        let sg = side.sign();
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&al, &be)| (al * (b * eb - a * ea) - be * b * eb) * sg)
            .map(|v| if sg * x_n < 0.0 { ZERO } else { v })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCoefficients {
    pub plus: SideCoefficients,
    pub minus: SideCoefficients,
}

impl InterfaceCoefficients {
    pub fn side(&self, side: Side) -> &SideCoefficients {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }
}

/// Largest relative residual of each block of the interface equations.
/// Each row is normalized by the sum of the magnitudes of its terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceResiduals {
    pub momentum: f64,
    pub divergence: f64,
    pub divergence_beta: f64,
    pub tangential_stress: f64,
    pub normal_stress: f64,
    pub jump: f64,
    /// `Σ iξ_j β_{j−}` against the closed-form `iξ′·β′₋`.
    pub prime_consistency: f64,
}

impl InterfaceResiduals {
    pub fn max(&self) -> f64 {
        [
            self.momentum,
            self.divergence,
            self.divergence_beta,
            self.tangential_stress,
            self.normal_stress,
            self.jump,
            self.prime_consistency,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn row(terms: &[C64]) -> f64 {
    let mag: f64 = terms.iter().map(|t| t.norm()).sum();
    if mag == 0.0 {
        0.0
    } else {
        terms.iter().sum::<C64>().norm() / mag
    }
}

/// Closed-form solution of the interface system.
pub fn solve_interface(
    params: &FluidParams,
    consts: &DerivedConstants,
    point: &SymbolPoint,
    rhs: &InterfaceRhs,
) -> Result<InterfaceCoefficients> {
    let xi = tangential(point)?;
    let s = eval_core(params, consts, point)?;
    solve_interface_with(params, &s, xi, rhs)
}

/// [`solve_interface`] with the core symbols already evaluated.
pub fn solve_interface_with(
    params: &FluidParams,
    s: &CoreSymbols,
    xi: &[f64],
    rhs: &InterfaceRhs,
) -> Result<InterfaceCoefficients> {
    check_nondegenerate(s)?;
    let n = xi.len();
    if rhs.g_hat.len() != n + 1 || rhs.h_hat.len() != n + 1 {
        return Err(Error::InvalidParams("jump data dimension does not match the frequency vector".into()));
    }
    let a = s.a;
    let i = C64::i();
    let (g, h) = (rhs.g, rhs.h);

    let bpd_minus = (s.l11 * g + s.l12 * h) / s.f;
    let bn_minus = (s.l21 * g + s.l22 * h) / s.f;
    let bpd_plus = bpd_minus + idot(xi, &rhs.h_hat[..n]);
    let bn_plus = bn_minus + rhs.h_hat[n];

    let mut sides = Vec::with_capacity(2);
    for (side, bpd, bn) in [(Side::Plus, bpd_plus, bn_plus), (Side::Minus, bpd_minus, bn_minus)] {
        let sg = side.sign();
        let b = s.b(side);
        let mu = params.mu(side);
        let x = bpd - b * bn * sg;
        let alpha_n = x * sg / (a - b);
        let apd = x * a / (a - b);
        let gamma = -(b + a) * mu / a * x;
        let mut alpha: Vec<C64> = xi.iter().map(|&xj| -(i * xj) * x / ((a - b) * a)).collect();
        alpha.push(alpha_n);
        sides.push((alpha, gamma, apd, bpd, bn));
    }

    // Tangential β from the tangential stress rows and the velocity jump.
    let (ap, am) = (&sides[0].0, &sides[1].0);
    let (mp, mm) = (params.mu_plus, params.mu_minus);
    let (bp, bm) = (s.b_plus, s.b_minus);
    let mut beta_minus = Vec::with_capacity(n + 1);
    let mut beta_plus = Vec::with_capacity(n + 1);
    for j in 0..n {
        let ixj = i * xi[j];
        let known = ap[j] * (bp - a) * mp + ixj * bn_plus * mp - am[j] * (a - bm) * mm - ixj * bn_minus * mm;
        let bj = (known - bp * mp * rhs.h_hat[j] - rhs.g_hat[j]) / s.e;
        beta_minus.push(bj);
        beta_plus.push(bj + rhs.h_hat[j]);
    }
    beta_minus.push(bn_minus);
    beta_plus.push(bn_plus);

    let mut it = sides.into_iter();
    let (alpha, gamma, apd, bpd, _) = it.next().unwrap();
    let plus = SideCoefficients {
        alpha,
        beta: beta_plus,
        gamma,
        alpha_prime_dot: apd,
        beta_prime_dot: bpd,
    };
    let (alpha, gamma, apd, bpd, _) = it.next().unwrap();
    let minus = SideCoefficients {
        alpha,
        beta: beta_minus,
        gamma,
        alpha_prime_dot: apd,
        beta_prime_dot: bpd,
    };
    Ok(InterfaceCoefficients { plus, minus })
}

/// Residuals of every interface equation for given coefficients.
pub fn interface_residuals(
    params: &FluidParams,
    s: &CoreSymbols,
    xi: &[f64],
    rhs: &InterfaceRhs,
    c: &InterfaceCoefficients,
) -> InterfaceResiduals {
    let n = xi.len();
    let a = s.a;
    let i = C64::i();
    let mut r = InterfaceResiduals {
        momentum: 0.0,
        divergence: 0.0,
        divergence_beta: 0.0,
        tangential_stress: 0.0,
        normal_stress: 0.0,
        jump: 0.0,
        prime_consistency: 0.0,
    };
    for side in Side::BOTH {
        let sg = side.sign();
        let k = c.side(side);
        let b = s.b(side);
        let mu = params.mu(side);
        let ab = C64::new(a * a, 0.0) - b * b;
        for j in 0..n {
            r.momentum = r.momentum.max(row(&[-k.alpha[j] * ab * mu, i * xi[j] * k.gamma]));
        }
        r.momentum = r.momentum.max(row(&[-k.alpha[n] * ab * mu, -k.gamma * (sg * a)]));
        let apd = idot(xi, &k.alpha[..n]);
        let bpd = idot(xi, &k.beta[..n]);
        r.divergence = r.divergence.max(row(&[apd, -k.alpha[n] * (sg * a)]));
        r.divergence_beta = r
            .divergence_beta
            .max(row(&[-apd, bpd, b * k.alpha[n] * sg, -b * k.beta[n] * sg]));
        r.prime_consistency = r.prime_consistency.max(row(&[bpd, -k.beta_prime_dot]));
        r.prime_consistency = r.prime_consistency.max(row(&[apd, -k.alpha_prime_dot]));
    }
    let (p, m) = (&c.plus, &c.minus);
    let (mp, mm) = (params.mu_plus, params.mu_minus);
    let (bp, bm) = (s.b_plus, s.b_minus);
    for j in 0..n {
        let ixj = i * xi[j];
        r.tangential_stress = r.tangential_stress.max(row(&[
            p.alpha[j] * (bp - a) * mp,
            -p.beta[j] * bp * mp,
            ixj * p.beta[n] * mp,
            -m.alpha[j] * (a - bm) * mm,
            -m.beta[j] * bm * mm,
            -ixj * m.beta[n] * mm,
            -rhs.g_hat[j],
        ]));
    }
    r.normal_stress = row(&[
        p.alpha[n] * (bp - a) * (2.0 * mp),
        -p.beta[n] * bp * (2.0 * mp),
        -p.gamma,
        -m.alpha[n] * (a - bm) * (2.0 * mm),
        -m.beta[n] * bm * (2.0 * mm),
        m.gamma,
        -rhs.g_hat[n],
    ]);
    for jj in 0..=n {
        r.jump = r.jump.max(row(&[p.beta[jj], -m.beta[jj], -rhs.h_hat[jj]]));
    }
    r
}

/// Normal velocity trace from below, `ŵ_N(ξ′, 0−, λ) = β_{N−}`, straight from
/// the reduced right-hand sides.
pub fn trace_wn_minus(
    params: &FluidParams,
    consts: &DerivedConstants,
    point: &SymbolPoint,
    rhs: &InterfaceRhs,
) -> Result<C64> {
    tangential(point)?;
    let s = eval_core(params, consts, point)?;
    check_nondegenerate(&s)?;
    Ok((s.l21 * rhs.g + s.l22 * rhs.h) / s.f)
}

/// Closed forms of `(1/2π)∫ e^{i a ξ_N} R(ξ_N) dξ_N` for the five rational
/// factors of the whole-space resolvent on one side:
/// `1/P`, `iξ_N/P`, `1/(|ξ|²P)`, `iξ_N/(|ξ|²P)`, `(iξ_N)²/(|ξ|²P)` with
/// `P = ρλ + μ|ξ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialKernels {
    /// Forms written with `e^{−A|a|}` and `e^{−B|a|}` separately.
    pub direct: [C64; 5],
    /// The same values through `ℳ(|a|)`, finite at `B = A`.
    pub m_form: [C64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialKernelPair {
    pub plus: AxialKernels,
    pub minus: AxialKernels,
}

fn sign0(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else if a < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// ℳ-form kernels only; this is what the field quadrature uses.
#[inline]
fn kernels_m(a_freq: f64, b: C64, mu: f64, a: f64) -> [C64; 5] {
    let y = a.abs();
    let sg = sign0(a);
    let eb = (-b * y).exp();
    let m = m_kernel(a_freq, b, y);
    let apb = b + a_freq;
    let two_mu = 2.0 * mu;
    [
        eb / (b * two_mu),
        -eb * (sg / two_mu),
        -m / (apb * (two_mu * a_freq)) + eb / (b * apb * (two_mu * a_freq)),
        m * sg / (apb * two_mu),
        -m * a_freq / (apb * two_mu) - eb / (apb * two_mu),
    ]
}

fn kernels_direct(a_freq: f64, b: C64, mu: f64, a: f64) -> [C64; 5] {
    let y = a.abs();
    let sg = sign0(a);
    let ea = C64::new((-a_freq * y).exp(), 0.0);
    let eb = (-b * y).exp();
    let two_mu = 2.0 * mu;
    let den = (C64::new(a_freq * a_freq, 0.0) - b * b) * two_mu;
    [
        eb / (b * two_mu),
        -eb * (sg / two_mu),
        -(ea / a_freq - eb / b) / den,
        -(eb - ea) * sg / den,
        -(ea * a_freq - b * eb) / den,
    ]
}

pub fn axial_kernel_integrals(
    params: &FluidParams,
    consts: &DerivedConstants,
    point: &SymbolPoint,
    a: f64,
) -> Result<AxialKernelPair> {
    if !(a.is_finite() && a != 0.0) {
        return Err(Error::InvalidParams(format!("axial offset must be finite and nonzero, got {a}")));
    }
    if point.a <= 0.0 {
        return Err(Error::InvalidParams("axial kernels need A > 0".into()));
    }
    let s = eval_core(params, consts, point)?;
    let side = |sd: Side| AxialKernels {
        direct: kernels_direct(s.a, s.b(sd), params.mu(sd), a),
        m_form: kernels_m(s.a, s.b(sd), params.mu(sd), a),
    };
    Ok(AxialKernelPair {
        plus: side(Side::Plus),
        minus: side(Side::Minus),
    })
}

/// Axial shape of one force component on one side, as a function of the
/// distance `y = |x_N|` from the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AxialShape {
    Zero,
    /// `amplitude · exp(−((y − center)/width)²)`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `amplitude · (1 − (y/support)²)²` for `y < support`, zero beyond.
    Bump { amplitude: f64, support: f64 },
}

impl AxialShape {
    pub fn value(&self, y: f64) -> f64 {
        match *self {
            AxialShape::Zero => 0.0,
            AxialShape::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude * (-((y - center) / width).powi(2)).exp(),
            AxialShape::Bump { amplitude, support } => {
                if y < support {
                    let u = 1.0 - (y / support).powi(2);
                    amplitude * u * u
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AxialShape::Zero => true,
            AxialShape::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude.is_finite() && center.is_finite() && width.is_finite() && width > 0.0,
            AxialShape::Bump { amplitude, support } => amplitude.is_finite() && support.is_finite() && support > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("bad axial profile {self:?}")))
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            AxialShape::Zero => true,
            AxialShape::Gaussian { amplitude, .. } | AxialShape::Bump { amplitude, .. } => amplitude == 0.0,
        }
    }

    /// Distance beyond which the shape is below `rel` of its amplitude.
    pub fn extent(&self, rel: f64) -> f64 {
        match *self {
            AxialShape::Zero => 0.0,
            AxialShape::Gaussian { center, width, .. } => center.max(0.0) + width * (-rel.ln()).max(0.0).sqrt(),
            AxialShape::Bump { support, .. } => support,
        }
    }

    /// Interior points where the shape is not smooth.
    fn kinks(&self) -> Vec<f64> {
        match *self {
            AxialShape::Bump { support, .. } => vec![support],
            _ => vec![],
        }
    }
}

/// Axial shapes of one component above (`plus`) and below (`minus`) the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialProfile {
    pub plus: AxialShape,
    pub minus: AxialShape,
}

impl AxialProfile {
    pub fn shape(&self, side: Side) -> &AxialShape {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }
}

/// Separable force `f_J(x) = c_J(x′) · h_J^±(|x_N|)`, given at one tangential
/// frequency by the transformed coefficients `ĉ_J(ξ′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableForce {
    pub coeffs: Vec<C64>,
    pub profiles: Vec<AxialProfile>,
}

impl SeparableForce {
    pub fn zero(n: usize) -> Self {
        SeparableForce {
            coeffs: vec![ZERO; n],
            profiles: vec![
                AxialProfile {
                    plus: AxialShape::Zero,
                    minus: AxialShape::Zero,
                };
                n
            ],
        }
    }

    fn is_zero(&self) -> bool {
        self.coeffs
            .iter()
            .zip(&self.profiles)
            .all(|(c, p)| *c == ZERO || (p.plus.is_zero() && p.minus.is_zero()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialQuadrature {
    /// Absolute tolerance on each integral.
    pub tol: f64,
    /// Largest admissible truncation point.
    pub y_max: f64,
}

impl Default for AxialQuadrature {
    fn default() -> Self {
        AxialQuadrature { tol: 1e-12, y_max: 1e4 }
    }
}

/// Whole-space solution values at the interface on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WholeSpaceTraces {
    pub psi_plus: Vec<C64>,
    pub psi_minus: Vec<C64>,
    pub dpsi_plus: Vec<C64>,
    pub dpsi_minus: Vec<C64>,
}

impl WholeSpaceTraces {
    pub fn psi(&self, side: Side) -> &[C64] {
        match side {
            Side::Plus => &self.psi_plus,
            Side::Minus => &self.psi_minus,
        }
    }

    pub fn dpsi(&self, side: Side) -> &[C64] {
        match side {
            Side::Plus => &self.dpsi_plus,
            Side::Minus => &self.dpsi_minus,
        }
    }
}

fn check_force(xi: &[f64], f: &SeparableForce) -> Result<()> {
    let n = xi.len() + 1;
    if f.coeffs.len() != n || f.profiles.len() != n {
        return Err(Error::InvalidParams(format!("force needs {n} components")));
    }
    for p in &f.profiles {
        p.plus.validate()?;
        p.minus.validate()?;
    }
    Ok(())
}

/// Assemble `ψ̂` (first `N` slots) and `∂_N ψ̂` (next `N`) contributions of the
/// force values `fv` (already multiplied by density) from the five kernels.
#[inline]
fn accumulate(xi: &[f64], a_freq: f64, k: &[C64; 5], fv: &[C64], out: &mut [C64]) {
    let n = xi.len();
    let i = C64::i();
    let a2 = a_freq * a_freq;
    let fnn = fv[n];
    let ixf: C64 = xi.iter().zip(fv).map(|(&x, &f)| i * x * f).sum();
    for kk in 0..n {
        let xk = xi[kk];
        let xf: C64 = xi.iter().zip(fv).map(|(&x, &f)| f * (xk * x)).sum();
        out[kk] += fv[kk] * k[0] - xf * k[2] + i * xk * fnn * k[3];
        out[n + 1 + kk] += fv[kk] * k[1] - xf * k[3] + i * xk * fnn * k[4];
    }
    out[n] += fnn * a2 * k[2] + ixf * k[3];
    out[2 * n + 1] += fnn * a2 * k[3] + ixf * k[4];
}

/// `ψ̂_±(ξ′, x_N)` and `∂_N ψ̂_±` of the whole-space problem for the side's
/// fluid constants, evaluated at any `x_N` (the kernel side is chosen by the
/// caller, the force lives on both half-lines).
fn side_field(
    params: &FluidParams,
    s: &CoreSymbols,
    xi: &[f64],
    force: &SeparableForce,
    side: Side,
    x_n: f64,
    quad: &AxialQuadrature,
) -> Result<Vec<C64>> {
    let n = xi.len() + 1;
    let mut total = vec![ZERO; 2 * n];
    if force.is_zero() {
        return Ok(total);
    }
    let b = s.b(side);
    let mu = params.mu(side);
    let a_freq = s.a;
    let decay = a_freq.min(b.re);
    if decay <= 0.0 {
        return Err(Error::QuadratureFailure("kernel does not decay along the axis".into()));
    }
    let kernel_len = (1e3 / quad.tol).ln() / decay;
    for src in Side::BOTH {
        let shapes: Vec<AxialShape> = force.profiles.iter().map(|p| *p.shape(src)).collect();
        if force.coeffs.iter().zip(&shapes).all(|(c, sh)| *c == ZERO || sh.is_zero()) {
            continue;
        }
        let rho = params.rho(src);
        let sa = src.sign();
        let profile_len = shapes.iter().map(|sh| sh.extent(1e-3 * quad.tol)).fold(0.0, f64::max);
        // Distance of the kink of the kernel (a = 0) from the interface.
        let kink = if sa * x_n > 0.0 { x_n.abs() } else { 0.0 };
        let y_end = profile_len.min(kink + kernel_len);
        if y_end > quad.y_max {
            return Err(Error::QuadratureFailure(format!(
                "axial truncation {y_end:e} exceeds the configured limit {:e}",
                quad.y_max
            )));
        }
        let mut breaks = vec![0.0];
        for sh in &shapes {
            breaks.extend(sh.kinks());
        }
        if kink > 0.0 {
            breaks.push(kink);
        }
        // Panels of the scale of the fastest exponential keep the first split well resolved.
        let fast = 1.0 / b.norm().max(a_freq);
        breaks.push(fast);
        breaks.retain(|&y| y < y_end);
        breaks.push(y_end);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut fv = vec![ZERO; n];
        for w in breaks.windows(2) {
            let r = adaptive_vec(
                w[0],
                w[1],
                2 * n,
                |y, out| {
                    for (j, f) in fv.iter_mut().enumerate() {
                        *f = force.coeffs[j] * (rho * shapes[j].value(y));
                    }
                    let k = kernels_m(a_freq, b, mu, x_n - sa * y);
                    accumulate(xi, a_freq, &k, &fv, out);
                },
                AdaptiveOptions {
                    abs_tol: quad.tol / 2.0,
                    ..Default::default()
                },
            )?;
            for (t, v) in total.iter_mut().zip(&r.value) {
                *t += v;
            }
        }
    }
    Ok(total)
}

/// `(ψ̂, ∂_N ψ̂)` of the whole-space problem with the constants of `side`.
pub fn whole_space_field_with(
    params: &FluidParams,
    s: &CoreSymbols,
    xi: &[f64],
    force: &SeparableForce,
    side: Side,
    x_n: f64,
    quad: &AxialQuadrature,
) -> Result<(Vec<C64>, Vec<C64>)> {
    check_force(xi, force)?;
    let n = xi.len() + 1;
    let mut v = side_field(params, s, xi, force, side, x_n, quad)?;
    let d = v.split_off(n);
    Ok((v, d))
}

pub fn whole_space_traces_with(
    params: &FluidParams,
    s: &CoreSymbols,
    xi: &[f64],
    force: &SeparableForce,
    quad: &AxialQuadrature,
) -> Result<WholeSpaceTraces> {
    check_force(xi, force)?;
    let n = xi.len() + 1;
    let p = side_field(params, s, xi, force, Side::Plus, 0.0, quad)?;
    let m = side_field(params, s, xi, force, Side::Minus, 0.0, quad)?;
    Ok(WholeSpaceTraces {
        psi_plus: p[..n].to_vec(),
        dpsi_plus: p[n..].to_vec(),
        psi_minus: m[..n].to_vec(),
        dpsi_minus: m[n..].to_vec(),
    })
}

pub fn whole_space_traces(
    params: &FluidParams,
    consts: &DerivedConstants,
    point: &SymbolPoint,
    force: &SeparableForce,
    quad: &AxialQuadrature,
) -> Result<WholeSpaceTraces> {
    let xi = tangential(point)?;
    let s = eval_core(params, consts, point)?;
    whole_space_traces_with(params, &s, xi, force, quad)
}

/// `ψ̂(ξ′, x_N, λ)`: the upper fluid's whole-space solution for `x_N ≥ 0`,
/// the lower one's for `x_N < 0`.
pub fn whole_space_field(
    params: &FluidParams,
    consts: &DerivedConstants,
    point: &SymbolPoint,
    force: &SeparableForce,
    x_n: f64,
    quad: &AxialQuadrature,
) -> Result<Vec<C64>> {
    let side = if x_n >= 0.0 { Side::Plus } else { Side::Minus };
    whole_space_field_side(params, consts, point, force, side, x_n, quad)
}

/// Whole-space solution with the constants of `side`, at any `x_N`.
pub fn whole_space_field_side(
    params: &FluidParams,
    consts: &DerivedConstants,
    point: &SymbolPoint,
    force: &SeparableForce,
    side: Side,
    x_n: f64,
    quad: &AxialQuadrature,
) -> Result<Vec<C64>> {
    let xi = tangential(point)?;
    check_force(xi, force)?;
    if !x_n.is_finite() {
        return Err(Error::InvalidParams("x_N must be finite".into()));
    }
    let s = eval_core(params, consts, point)?;
    let n = xi.len() + 1;
    let mut v = side_field(params, &s, xi, force, side, x_n, quad)?;
    v.truncate(n);
    Ok(v)
}

/// Jump data `(ĝ, ĥ) = (−[[μD(ψ)e_N]], −[[ψ]])` of the correction that turns
/// the whole-space solutions into the two-phase parabolic part.
pub fn parabolic_jump_data(params: &FluidParams, xi: &[f64], t: &WholeSpaceTraces) -> (Vec<C64>, Vec<C64>) {
    let n = xi.len();
    let i = C64::i();
    let stress = |side: Side| -> Vec<C64> {
        let mu = params.mu(side);
        let (p, d) = (t.psi(side), t.dpsi(side));
        let mut v: Vec<C64> = (0..n).map(|j| (d[j] + i * xi[j] * p[n]) * mu).collect();
        v.push(d[n] * (2.0 * mu));
        v
    };
    let sp = stress(Side::Plus);
    let sm = stress(Side::Minus);
    let g = sp.iter().zip(&sm).map(|(a, b)| -(a - b)).collect();
    let h = t.psi_plus.iter().zip(&t.psi_minus).map(|(a, b)| -(a - b)).collect();
    (g, h)
}

/// Normal velocity of the parabolic part at the interface,
/// `û_N^P(0) = ψ̂_{N−}(0) + v̂_N(0−)`.
pub fn parabolic_trace_unp(
    params: &FluidParams,
    consts: &DerivedConstants,
    point: &SymbolPoint,
    force: &SeparableForce,
    quad: &AxialQuadrature,
) -> Result<C64> {
    let xi = tangential(point)?;
    let s = eval_core(params, consts, point)?;
    check_nondegenerate(&s)?;
    let t = whole_space_traces_with(params, &s, xi, force, quad)?;
    Ok(parabolic_trace_from_traces(params, &s, xi, &t))
}

pub fn parabolic_trace_from_traces(params: &FluidParams, s: &CoreSymbols, xi: &[f64], t: &WholeSpaceTraces) -> C64 {
    let n = xi.len();
    let (g_hat, h_hat) = parabolic_jump_data(params, xi, t);
    let (g, h) = reduced_rhs(params, s, xi, &g_hat, &h_hat);
    t.psi_minus[n] + (s.l21 * g + s.l22 * h) / s.f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gl;
    use crate::symbols::derive_constants;
    use crate::oracles::{max_rel, rel};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn setup() -> (FluidParams, DerivedConstants) {
        let p = FluidParams::default();
        let c = derive_constants(&p, None).unwrap();
        (p, c)
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_velocity_jump_gives_pure_normal_reduction() {
        let (p, k) = setup();
        let xi = [0.3, -0.4];
        let pt = SymbolPoint::with_xi(&xi, c(0.7, 1.1)).unwrap();
        let s = eval_core(&p, &k, &pt).unwrap();
        let gn = c(0.2, -1.3);
        let rhs = InterfaceRhs::new(&p, &s, &xi, vec![ZERO, ZERO, gn], vec![ZERO; 3]).unwrap();
        assert_eq!(rhs.g, ZERO);
        assert!((rhs.h - (-gn * pt.a)).norm() < 1e-15);
    }

    #[test]
    fn no_velocity_jump_keeps_beta_continuous() {
        let (p, k) = setup();
        let xi = [0.9];
        let pt = SymbolPoint::with_xi(&xi, c(-0.1, 2.0)).unwrap();
        let s = eval_core(&p, &k, &pt).unwrap();
        let rhs = InterfaceRhs::new(&p, &s, &xi, vec![c(1.0, 0.5), c(-0.3, 0.2)], vec![ZERO; 2]).unwrap();
        let co = solve_interface(&p, &k, &pt, &rhs).unwrap();
        for j in 0..2 {
            assert_eq!(co.plus.beta[j], co.minus.beta[j]);
        }
    }

    #[test]
    fn trace_matches_solved_coefficient_and_vanishes_for_zero_data() {
        let (p, k) = setup();
        let xi = [0.2, 0.5];
        let pt = SymbolPoint::with_xi(&xi, c(0.4, -0.8)).unwrap();
        let s = eval_core(&p, &k, &pt).unwrap();
        let g = vec![c(0.1, 0.2), c(-0.7, 0.0), c(0.3, 0.9)];
        let h = vec![c(0.0, 1.0), c(0.4, -0.2), c(-1.1, 0.3)];
        let rhs = InterfaceRhs::new(&p, &s, &xi, g.clone(), h.clone()).unwrap();
        let co = solve_interface(&p, &k, &pt, &rhs).unwrap();
        let tr = trace_wn_minus(&p, &k, &pt, &rhs).unwrap();
        assert!(rel(tr, co.minus.beta_n()) <= 1e-14);
        assert_eq!(trace_wn_minus(&p, &k, &pt, &InterfaceRhs::zero(3)).unwrap(), ZERO);

        // Conjugate point with conjugated data.
        let ptc = SymbolPoint::with_xi(&xi, pt.lambda.conj()).unwrap();
        let sc = eval_core(&p, &k, &ptc).unwrap();
        // iξ terms flip under conjugation, so flip ξ' as well.
        let xin = [-0.2, -0.5];
        let ptn = SymbolPoint::with_xi(&xin, pt.lambda.conj()).unwrap();
        let gc: Vec<C64> = g.iter().map(|z| z.conj()).collect();
        let hc: Vec<C64> = h.iter().map(|z| z.conj()).collect();
        let rc = InterfaceRhs::new(&p, &sc, &xin, gc, hc).unwrap();
        let trc = trace_wn_minus(&p, &k, &ptn, &rc).unwrap();
        assert!(rel(trc, tr.conj()) < 1e-13, "{trc} {tr}");
    }

    #[test]
    fn degenerate_symbol_is_reported() {
        let (p, k) = setup();
        let s = eval_core(&p, &k, &SymbolPoint::with_xi(&[1e-9], c(1e-30, 1e-30)).unwrap());
        // Tiny A and λ make F tiny in absolute terms but not relative to its scale;
        // force degeneracy by zeroing F.
        let mut s = s.unwrap();
        s.f = ZERO;
        let rhs = InterfaceRhs::zero(2);
        let e = solve_interface_with(&p, &s, &[1e-9], &rhs).unwrap_err();
        assert_eq!(e.kind(), "DegenerateSymbol");
    }

    #[test]
    fn reduced_system_matches_dense_two_by_two() {
        let (p, k) = setup();
        let xi = [0.6, 0.1];
        let pt = SymbolPoint::with_xi(&xi, c(0.3, 0.7)).unwrap();
        let s = eval_core(&p, &k, &pt).unwrap();
        let (mp, mm, a) = (p.mu_plus, p.mu_minus, s.a);
        let (bp, bm) = (s.b_plus, s.b_minus);
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                (a + bp) * mp + (a + bm) * mm,
                -(bp - a) * (mp * a) + (bm - a) * (mm * a),
                -(bp - a) * mp + (bm - a) * mm,
                bp * (a + bp) * mp + bm * (bm + a) * mm,
            ],
        );
        let g = vec![c(0.3, -0.2), c(1.0, 0.1), c(-0.4, 0.6)];
        let h = vec![c(0.2, 0.2), c(0.0, -0.9), c(0.5, 0.0)];
        let rhs = InterfaceRhs::new(&p, &s, &xi, g, h).unwrap();
        let x = m.lu().solve(&DVector::from_vec(vec![rhs.g, rhs.h])).unwrap();
        let co = solve_interface(&p, &k, &pt, &rhs).unwrap();
        assert!(rel(x[0], co.minus.beta_prime_dot) < 1e-12);
        assert!(rel(x[1], co.minus.beta_n()) < 1e-12);
    }

    fn arb_c() -> impl Strategy<Value = C64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn closed_form_matches_dense_oracle(
            rp in 0.2f64..5.0, rm in 0.2f64..5.0, mp in 0.2f64..5.0, mm in 0.2f64..5.0,
            xi1 in -3.0f64..3.0, xi2 in -3.0f64..3.0, three in any::<bool>(),
            lr in -0.5f64..4.0, li in -4.0f64..4.0,
            g in proptest::collection::vec(arb_c(), 3),
            h in proptest::collection::vec(arb_c(), 3),
        ) {
            let p = FluidParams::new(rp, rm, mp, mm, 1.0, 2.0).unwrap();
            let k = derive_constants(&p, None).unwrap();
            let xi: Vec<f64> = if three { vec![xi1, xi2] } else { vec![xi1] };
            let n = xi.len() + 1;
            prop_assume!(xi.iter().map(|x| x * x).sum::<f64>() > 1e-2);
            let pt = SymbolPoint::with_xi(&xi, C64::new(lr, li)).unwrap();
            let s = match eval_core(&p, &k, &pt) { Ok(s) => s, Err(_) => return Ok(()) };
            // Stay clear of B = A, where the ansatz itself degenerates.
            prop_assume!((s.b_plus - s.a).norm() > 1e-2 * s.a && (s.b_minus - s.a).norm() > 1e-2 * s.a);
            let (g, h) = (g[..n].to_vec(), h[..n].to_vec());
            let rhs = InterfaceRhs::new(&p, &s, &xi, g.clone(), h.clone()).unwrap();
            let co = match solve_interface_with(&p, &s, &xi, &rhs) { Ok(c) => c, Err(_) => return Ok(()) };
            let res = interface_residuals(&p, &s, &xi, &rhs, &co);
            prop_assert!(res.max() <= 1e-10, "{res:?}");
            let d = crate::oracles::dense_interface_solve(&p, &s, &xi, &g, &h).unwrap();
            for side in Side::BOTH {
                let (x, y) = (co.side(side), d.side(side));
                prop_assert!(max_rel(&x.beta, &y.beta) <= 1e-9, "beta {side:?} {:?} {:?}", x.beta, y.beta);
                prop_assert!(rel(x.beta_prime_dot, y.beta_prime_dot) <= 1e-9 || (x.beta_prime_dot - y.beta_prime_dot).norm() < 1e-12 * max_scale(&y.beta));
            }
            prop_assert!(rel(co.minus.beta_n(), d.minus.beta_n()) <= 1e-9);
        }
    }

    fn max_scale(v: &[C64]) -> f64 {
        v.iter().fold(1.0f64, |m, z| m.max(z.norm()))
    }

    #[test]
    fn dense_oracle_fixed_point_tight() {
        let (p, k) = setup();
        let xi = [0.8, -0.3];
        let pt = SymbolPoint::with_xi(&xi, c(0.5, 1.5)).unwrap();
        let s = eval_core(&p, &k, &pt).unwrap();
        let g = vec![c(0.3, -0.2), c(1.0, 0.1), c(-0.4, 0.6)];
        let h = vec![c(0.2, 0.2), c(0.0, -0.9), c(0.5, 0.0)];
        let rhs = InterfaceRhs::new(&p, &s, &xi, g.clone(), h.clone()).unwrap();
        let co = solve_interface(&p, &k, &pt, &rhs).unwrap();
        let d = crate::oracles::dense_interface_solve(&p, &s, &xi, &g, &h).unwrap();
        assert!(rel(co.minus.beta_prime_dot, d.minus.beta_prime_dot) <= 1e-12);
        assert!(rel(co.minus.beta_n(), d.minus.beta_n()) <= 1e-12);
        let res = interface_residuals(&p, &s, &xi, &rhs, &co);
        assert!(res.tangential_stress <= 1e-12 && res.normal_stress <= 1e-12 && res.jump <= 1e-12, "{res:?}");
        assert!(res.divergence <= 1e-12 && res.divergence_beta <= 1e-12);
    }

    #[test]
    fn kernels_match_fourier_quadrature_on_random_draws() {
        let (p, k) = setup();
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let a_freq = 0.05 + 3.0 * next();
            let lam = c(-0.2 + 3.0 * next(), -4.0 + 8.0 * next());
            let off = (0.1 + 3.0 * next()) * if next() < 0.5 { -1.0 } else { 1.0 };
            let pt = SymbolPoint::new(a_freq, lam).unwrap();
            let s = eval_core(&p, &k, &pt).unwrap();
            let pair = axial_kernel_integrals(&p, &k, &pt, off).unwrap();
            for side in Side::BOTH {
                let got = if side == Side::Plus { pair.plus } else { pair.minus };
                let want = crate::oracles::oracle_axial_kernels(&p, &s, side, off).unwrap();
                for q in 0..5 {
                    let scale = want[q].norm().max(1e-8);
                    assert!(
                        (got.m_form[q] - want[q]).norm() <= 1e-6 * scale,
                        "K{} side {side:?} A={a_freq} λ={lam} a={off}: {} vs {}",
                        q + 1,
                        got.m_form[q],
                        want[q]
                    );
                    assert!((got.direct[q] - got.m_form[q]).norm() <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn odd_kernels_flip_with_offset_and_m_form_survives_zero_lambda() {
        let (p, k) = setup();
        let pt = SymbolPoint::new(0.7, c(0.3, 0.2)).unwrap();
        let x = axial_kernel_integrals(&p, &k, &pt, 0.8).unwrap();
        let y = axial_kernel_integrals(&p, &k, &pt, -0.8).unwrap();
        assert_eq!(x.plus.m_form[1], -y.plus.m_form[1]);
        assert_eq!(x.minus.m_form[3], -y.minus.m_form[3]);
        assert_eq!(x.plus.m_form[2], y.plus.m_form[2]);

        let pt0 = SymbolPoint::new(0.7, ZERO).unwrap();
        let z = axial_kernel_integrals(&p, &k, &pt0, 0.5).unwrap();
        assert!(z.plus.m_form.iter().all(|v| v.is_finite()));
        // Limit B → A of the third kernel: (1 + A|a|) e^{−A|a|} / (4μA³).
        let (a, y) = (0.7f64, 0.5f64);
        let want = (1.0 + a * y) * (-a * y).exp() / (4.0 * p.mu_plus * a.powi(3));
        assert!((z.plus.m_form[2].re - want).abs() < 1e-12 * want, "{} {want}", z.plus.m_form[2]);
    }

    fn gaussian_force(n: usize) -> SeparableForce {
        let prof = AxialProfile {
            plus: AxialShape::Gaussian {
                amplitude: 1.0,
                center: 0.0,
                width: 1.0,
            },
            minus: AxialShape::Gaussian {
                amplitude: 0.5,
                center: 0.5,
                width: 0.7,
            },
        };
        let mut coeffs: Vec<C64> = (0..n).map(|j| c(0.3 + j as f64, -0.2 * j as f64)).collect();
        coeffs[n - 1] = c(1.0, 0.4);
        SeparableForce {
            coeffs,
            profiles: vec![prof; n],
        }
    }

    /// Direct transcription of the trace display with fixed composite GL.
    fn reference_traces(p: &FluidParams, s: &CoreSymbols, xi: &[f64], f: &SeparableForce, panels: usize) -> WholeSpaceTraces {
        let n = xi.len();
        let a = s.a;
        let i = C64::i();
        let rule = gl(32);
        let y_end = 12.0;
        let mut out: Vec<Vec<C64>> = vec![vec![ZERO; n + 1]; 4];
        for (si, side) in Side::BOTH.into_iter().enumerate() {
            let b = s.b(side);
            let mu = p.mu(side);
            let apb = b + a;
            for src in Side::BOTH {
                let sa = src.sign();
                let rho = p.rho(src);
                for k in 0..panels {
                    let lo = y_end * (k as f64 / panels as f64).powi(2);
                    let hi = y_end * ((k + 1) as f64 / panels as f64).powi(2);
                    for (y, w) in rule.mapped(lo, hi) {
                        let fv: Vec<C64> =
                            (0..=n).map(|j| f.coeffs[j] * (rho * f.profiles[j].shape(src).value(y))).collect();
                        let m = m_kernel(a, b, y);
                        let eb = (-b * y).exp();
                        let psi = &mut out[si];
                        for kk in 0..n {
                            let mut v = eb / (b * 2.0 * mu) * fv[kk];
                            for j in 0..n {
                                v += m * (xi[kk] * xi[j]) / (apb * 2.0 * mu * a) * fv[j]
                                    - eb * (xi[kk] * xi[j]) / (b * apb * 2.0 * mu * a) * fv[j];
                            }
                            v -= i * xi[kk] * m / (apb * 2.0 * mu) * fv[n] * sa;
                            psi[kk] += v * w;
                        }
                        let mut v = -m * a / (apb * 2.0 * mu) * fv[n] + eb * a / (b * apb * 2.0 * mu) * fv[n];
                        for j in 0..n {
                            v -= i * xi[j] * m / (apb * 2.0 * mu) * fv[j] * sa;
                        }
                        psi[n] += v * w;
                        let dpsi = &mut out[2 + si];
                        for kk in 0..n {
                            let mut v = eb / (2.0 * mu) * fv[kk] * sa;
                            for j in 0..n {
                                v += m * (xi[kk] * xi[j]) / (apb * 2.0 * mu) * fv[j] * sa;
                            }
                            v -= i * xi[kk] * a * m / (apb * 2.0 * mu) * fv[n];
                            v -= i * xi[kk] * eb / (apb * 2.0 * mu) * fv[n];
                            dpsi[kk] += v * w;
                        }
                        let mut v = -m * (a * a) / (apb * 2.0 * mu) * fv[n] * sa;
                        for j in 0..n {
                            v -= i * xi[j] * a * m / (apb * 2.0 * mu) * fv[j];
                            v -= i * xi[j] * eb / (apb * 2.0 * mu) * fv[j];
                        }
                        dpsi[n] += v * w;
                    }
                }
            }
        }
        WholeSpaceTraces {
            psi_plus: out[0].clone(),
            psi_minus: out[1].clone(),
            dpsi_plus: out[2].clone(),
            dpsi_minus: out[3].clone(),
        }
    }

    #[test]
    fn traces_match_refined_reference() {
        let (p, k) = setup();
        let xi = [0.4, -0.7];
        let pt = SymbolPoint::with_xi(&xi, c(0.6, 1.3)).unwrap();
        let s = eval_core(&p, &k, &pt).unwrap();
        let f = gaussian_force(3);
        let t = whole_space_traces(&p, &k, &pt, &f, &AxialQuadrature::default()).unwrap();
        let r1 = reference_traces(&p, &s, &xi, &f, 16);
        let r4 = reference_traces(&p, &s, &xi, &f, 64);
        for side in Side::BOTH {
            assert!(max_rel(r1.psi(side), r4.psi(side)) < 1e-12);
            assert!(max_rel(t.psi(side), r4.psi(side)) <= 1e-8, "{:?} {:?}", t.psi(side), r4.psi(side));
            assert!(max_rel(t.dpsi(side), r4.dpsi(side)) <= 1e-8, "{:?} {:?}", t.dpsi(side), r4.dpsi(side));
        }
    }

    #[test]
    fn zero_force_gives_zero_everything() {
        let (p, k) = setup();
        let xi = [0.5];
        let pt = SymbolPoint::with_xi(&xi, c(1.0, 0.5)).unwrap();
        let f = SeparableForce::zero(2);
        let q = AxialQuadrature::default();
        let t = whole_space_traces(&p, &k, &pt, &f, &q).unwrap();
        assert!(t.psi_plus.iter().chain(&t.dpsi_minus).all(|z| *z == ZERO));
        assert_eq!(parabolic_trace_unp(&p, &k, &pt, &f, &q).unwrap(), ZERO);
        assert!(whole_space_field(&p, &k, &pt, &f, -0.3, &q).unwrap().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn identical_fluids_with_even_force_have_equal_traces_and_no_correction() {
        let p = FluidParams::new(1.5, 1.5, 0.8, 0.8, 1.0, 2.0).unwrap();
        let k = derive_constants(&p, None).unwrap();
        let xi = [0.6];
        let pt = SymbolPoint::with_xi(&xi, c(0.2, 0.9)).unwrap();
        let g = AxialShape::Gaussian {
            amplitude: 1.0,
            center: 0.3,
            width: 0.8,
        };
        let f = SeparableForce {
            coeffs: vec![c(0.4, 0.1), c(-0.2, 1.0)],
            profiles: vec![AxialProfile { plus: g, minus: g }; 2],
        };
        let q = AxialQuadrature::default();
        let t = whole_space_traces(&p, &k, &pt, &f, &q).unwrap();
        assert!(max_rel(&t.psi_plus, &t.psi_minus) < 1e-12);
        let u = parabolic_trace_unp(&p, &k, &pt, &f, &q).unwrap();
        assert!(rel(u, t.psi_minus[1]) < 1e-12);
    }

    #[test]
    fn parabolic_trace_matches_bracket_assembly() {
        let (p, k) = setup();
        let xi = [0.5, 0.2];
        let pt = SymbolPoint::with_xi(&xi, c(0.9, -0.6)).unwrap();
        let s = eval_core(&p, &k, &pt).unwrap();
        let f = gaussian_force(3);
        let q = AxialQuadrature::default();
        let t = whole_space_traces(&p, &k, &pt, &f, &q).unwrap();
        let got = parabolic_trace_unp(&p, &k, &pt, &f, &q).unwrap();

        let i = C64::i();
        let (a, bp) = (s.a, s.b_plus);
        let (mp, mm) = (p.mu_plus, p.mu_minus);
        let ixd = |v: &[C64]| -> C64 { i * xi[0] * v[0] + i * xi[1] * v[1] };
        let jump_t = ixd(&t.psi_plus) - ixd(&t.psi_minus);
        let jump_n = t.psi_plus[2] - t.psi_minus[2];
        let first = (ixd(&t.dpsi_plus) - t.psi_plus[2] * (a * a)) * mp
            - (ixd(&t.dpsi_minus) - t.psi_minus[2] * (a * a)) * mm
            + (a + bp) * mp * jump_t
            - (bp - a) * (mp * a) * jump_n;
        let second = (t.dpsi_plus[2] * (2.0 * mp) - t.dpsi_minus[2] * (2.0 * mm)) * a
            - (bp - a) * mp * jump_t
            + bp * (a + bp) * mp * jump_n;
        let want = t.psi_minus[2] + s.l21 / s.f * first + s.l22 / s.f * second;
        assert!(rel(got, want) <= 1e-10, "{got} {want}");
    }

    #[test]
    fn field_approaches_traces_at_the_interface() {
        let (p, k) = setup();
        let xi = [0.7];
        let pt = SymbolPoint::with_xi(&xi, c(0.4, 0.8)).unwrap();
        let f = gaussian_force(2);
        let q = AxialQuadrature::default();
        let t = whole_space_traces(&p, &k, &pt, &f, &q).unwrap();
        let up = whole_space_field(&p, &k, &pt, &f, 1e-10, &q).unwrap();
        let dn = whole_space_field(&p, &k, &pt, &f, -1e-10, &q).unwrap();
        assert!(max_rel(&up, &t.psi_plus) <= 1e-8, "{up:?} {:?}", t.psi_plus);
        assert!(max_rel(&dn, &t.psi_minus) <= 1e-8, "{dn:?} {:?}", t.psi_minus);
    }

    #[test]
    fn upper_force_field_decays_below() {
        let (p, k) = setup();
        let xi = [0.8];
        let pt = SymbolPoint::with_xi(&xi, c(0.5, 0.0)).unwrap();
        let f = SeparableForce {
            coeffs: vec![c(1.0, 0.0), c(0.5, 0.0)],
            profiles: vec![
                AxialProfile {
                    plus: AxialShape::Bump {
                        amplitude: 1.0,
                        support: 1.0,
                    },
                    minus: AxialShape::Zero,
                };
                2
            ],
        };
        let q = AxialQuadrature::default();
        let mut prev = f64::INFINITY;
        let mut mags = vec![];
        for x in [-1.0, -2.0, -4.0, -8.0, -16.0] {
            let v = whole_space_field(&p, &k, &pt, &f, x, &q).unwrap();
            let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(m < prev, "not monotone at {x}: {m} >= {prev}");
            prev = m;
            mags.push((x, m));
        }
        // Exponential tail: the decay exponent stays bounded away from zero.
        let (x1, m1) = mags[3];
        let (x2, m2) = mags[4];
        let c_rate = (m1 / m2).ln() / (x1 - x2).abs();
        assert!(c_rate > 0.5 * pt.a, "rate {c_rate}");
    }

    #[test]
    fn truncation_beyond_limit_is_reported() {
        let (p, k) = setup();
        let xi = [1e-3];
        let pt = SymbolPoint::with_xi(&xi, c(1e-3, 0.0)).unwrap();
        let g = AxialShape::Gaussian {
            amplitude: 1.0,
            center: 0.0,
            width: 1e4,
        };
        let f = SeparableForce {
            coeffs: vec![c(1.0, 0.0), c(1.0, 0.0)],
            profiles: vec![AxialProfile { plus: g, minus: g }; 2],
        };
        let e = whole_space_traces(&p, &k, &pt, &f, &AxialQuadrature { tol: 1e-10, y_max: 100.0 }).unwrap_err();
        assert_eq!(e.kind(), "QuadratureFailure");
    }

    #[test]
    fn profile_presets() {
        let g = AxialShape::Gaussian {
            amplitude: 2.0,
            center: 1.0,
            width: 0.5,
        };
        assert_eq!(g.value(1.0), 2.0);
        assert!((g.value(1.5) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        let b = AxialShape::Bump {
            amplitude: 3.0,
            support: 2.0,
        };
        assert_eq!(b.value(0.0), 3.0);
        assert_eq!(b.value(2.5), 0.0);
        assert!((b.value(1.0) - 3.0 * 0.5625).abs() < 1e-15);
        let j = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<AxialShape>(&j).unwrap(), b);
        assert!(AxialShape::Bump {
            amplitude: 1.0,
            support: -1.0
        }
        .validate()
        .is_err());
    }
}
