//! Fourier-side semigroup at a tangential frequency: height `η̂`, velocity
//! `û` and pressure `𝔭̂` as contour integrals of `e^{λt}` against the
//! resolvent symbols, summed over the low, middle and high bands.
//!
//! Low band values are the sweep integral plus the two residues at `λ±`;
//! middle and high bands share the left-shifted vertical contour.

use crate::contours::{build_gamma0, build_high_paths, build_low_paths, integrate_exp_vec, ContourPath};
use crate::error::{Error, Result};
use crate::layers::{
    parabolic_jump_data, parabolic_trace_from_traces, solve_interface_with, whole_space_field_with,
    whole_space_traces_with, AxialProfile, AxialQuadrature, InterfaceRhs, SeparableForce,
};
use crate::roots::{find_roots, FrequencyCalibration};
use crate::symbols::{
    eval_core_at, eval_core_with_derivatives, kernel_symbols_from_core, m_kernel_pair, DerivedConstants,
    FluidParams, Side,
};
use crate::transform::{CutoffSpec, DataPreset};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A sampling location in the normal direction, tagged with its fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub side: Side,
    pub x_n: f64,
}

impl Probe {
    pub fn new(side: Side, x_n: f64) -> Result<Self> {
        if !x_n.is_finite() || side.sign() * x_n < 0.0 {
            return Err(Error::InvalidParams(format!(
                "x_N = {x_n} is not on the {} side",
                side.label()
            )));
        }
        Ok(Probe { side, x_n })
    }

    /// Both one-sided probes at the interface.
    pub fn interface() -> [Probe; 2] {
        [
            Probe {
                side: Side::Plus,
                x_n: 0.0,
            },
            Probe {
                side: Side::Minus,
                x_n: 0.0,
            },
        ]
    }
}

/// Which bands contribute to a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandMask {
    pub low: bool,
    pub mid: bool,
    pub high: bool,
}

impl Default for BandMask {
    fn default() -> Self {
        BandMask {
            low: true,
            mid: true,
            high: true,
        }
    }
}

impl BandMask {
    pub fn only_high() -> Self {
        BandMask {
            low: false,
            mid: false,
            high: true,
        }
    }

    pub fn only_low() -> Self {
        BandMask {
            low: true,
            mid: false,
            high: false,
        }
    }

    fn apply(&self, w: [f64; 3]) -> [f64; 3] {
        [
            if self.low { w[0] } else { 0.0 },
            if self.mid { w[1] } else { 0.0 },
            if self.high { w[2] } else { 0.0 },
        ]
    }
}

/// Path families used to evaluate a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    /// Low-band sweep plus residues at the slow roots.
    Low,
    /// Vertical segment left of the origin with the two outer rays.
    High,
    /// The right-most contour, used as an oracle.
    Gamma0,
}

/// One tangential force component: a Gaussian in `x′` times axial shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceComponent {
    pub tangential: DataPreset,
    pub profile: AxialProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceSpec {
    pub components: Vec<ForceComponent>,
}

impl ForceSpec {
    pub fn at(&self, xi: &[f64]) -> SeparableForce {
        SeparableForce {
            coeffs: self.components.iter().map(|c| c.tangential.hat(xi)).collect(),
            profiles: self.components.iter().map(|c| c.profile).collect(),
        }
    }
}

/// Initial height and body force. Presets are real and even in `x′`, so
/// their transforms are real and Hermitian by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingData {
    pub height: DataPreset,
    pub force: Option<ForceSpec>,
    #[serde(default)]
    pub bands: BandMask,
}

impl DrivingData {
    pub fn new(height: DataPreset, force: Option<ForceSpec>, bands: BandMask) -> Result<Self> {
        height.validate()?;
        if let Some(f) = &force {
            for c in &f.components {
                c.tangential.validate()?;
                c.profile.plus.validate()?;
                c.profile.minus.validate()?;
            }
        }
        Ok(DrivingData { height, force, bands })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Contour quadrature tolerance relative to the data magnitude.
    pub rel_tol: f64,
    pub quad: AxialQuadrature,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            rel_tol: 1e-11,
            quad: AxialQuadrature::default(),
        }
    }
}

/// Everything the integrand needs at one frequency.
struct Ctx<'a> {
    params: &'a FluidParams,
    consts: &'a DerivedConstants,
    xi: &'a [f64],
    a: f64,
    d_hat: C64,
    force: Option<&'a SeparableForce>,
    probes: &'a [Probe],
    quad: AxialQuadrature,
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.xi.len() + 1
    }

    fn block(&self) -> usize {
        4 * self.n() + 1
    }

    fn dim(&self) -> usize {
        1 + self.probes.len() * self.block()
    }

    fn scale(&self) -> f64 {
        let f = self
            .force
            .map(|f| f.coeffs.iter().map(|c| c.norm()).sum::<f64>())
            .unwrap_or(0.0);
        self.d_hat.norm() + f
    }

    /// Integrand at `λ` without the `e^{λt}` factor. With `residue` set, the
    /// factor `1/L` is replaced by the given `1/∂_λL` and the parabolic part,
    /// which has no pole there, is left out.
    fn fill(&self, lam: C64, residue: Option<C64>, out: &mut [C64]) -> Result<()> {
        let (params, xi, a) = (self.params, self.xi, self.a);
        let n = self.n();
        let s = eval_core_at(params, self.consts, a, lam)?;
        let mut z = self.d_hat;
        let mut correction = None;
        if let Some(force) = self.force {
            let tr = whole_space_traces_with(params, &s, xi, force, &self.quad)?;
            z += parabolic_trace_from_traces(params, &s, xi, &tr);
            if residue.is_none() && !self.probes.is_empty() {
                let (g, h) = parabolic_jump_data(params, xi, &tr);
                let rhs = InterfaceRhs::new(params, &s, xi, g, h)?;
                correction = Some(solve_interface_with(params, &s, xi, &rhs)?);
            }
        }
        let inv_l = residue.unwrap_or_else(|| s.l.inv());
        out[0] = s.f * inv_l * z;
        if self.probes.is_empty() {
            return Ok(());
        }
        let ks = kernel_symbols_from_core(params, self.consts, &s, xi);
        let r = self.consts.omega + params.sigma * a * a;
        let zl = z * inv_l;
        for (k, pr) in self.probes.iter().enumerate() {
            let base = 1 + k * self.block();
            let side = pr.side;
            let sg = side.sign();
            let y = pr.x_n.abs();
            let b = s.b(side);
            let ea = (-a * y).exp();
            let eb = (-b * y).exp();
            let (m, mdx) = m_kernel_pair(a, b, y, ea, eb);
            let ii = ks.i(side);
            for c in 0..n {
                let jc = ks.j[c] / s.e;
                out[base + c] = (ii[c] * m + jc * eb) * zl;
                out[base + n + c] = (ii[c] * mdx - jc * b * eb) * zl * sg;
            }
            out[base + 2 * n] = (b + a) * params.mu(side) * r * (s.l12 - s.l22 * b * sg) * zl * ea;
            let up = base + 2 * n + 1;
            for v in &mut out[up..up + 2 * n] {
                *v = ZERO;
            }
            if let (Some(coef), Some(force)) = (&correction, self.force) {
                let (psi, dpsi) = whole_space_field_with(params, &s, xi, force, side, pr.x_n, &self.quad)?;
                let cs = coef.side(side);
                let w = cs.profile(a, b, side, pr.x_n);
                let dw = cs.profile_dx(a, b, side, pr.x_n);
                for c in 0..n {
                    let u = psi[c] + w[c];
                    let du = dpsi[c] + dw[c];
                    out[up + c] = u;
                    out[up + n + c] = du;
                    out[base + c] += u;
                    out[base + n + c] += du;
                }
            }
        }
        Ok(())
    }
}

/// Values at one frequency and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyValues {
    pub eta: C64,
    /// Total velocity per probe, `N` components.
    pub u: Vec<Vec<C64>>,
    /// Analytic `∂_N û` per probe.
    pub du: Vec<Vec<C64>>,
    /// Pressure of the interface-driven part per probe.
    pub p: Vec<C64>,
    /// Parabolic (force-driven, interface-free) velocity per probe.
    pub u_p: Vec<Vec<C64>>,
    pub du_p: Vec<Vec<C64>>,
}

impl FrequencyValues {
    fn unpack(v: &[C64], n: usize, probes: usize) -> Self {
        let block = 4 * n + 1;
        let mut out = FrequencyValues {
            eta: v[0],
            u: Vec::with_capacity(probes),
            du: Vec::with_capacity(probes),
            p: Vec::with_capacity(probes),
            u_p: Vec::with_capacity(probes),
            du_p: Vec::with_capacity(probes),
        };
        for k in 0..probes {
            let b = 1 + k * block;
            out.u.push(v[b..b + n].to_vec());
            out.du.push(v[b + n..b + 2 * n].to_vec());
            out.p.push(v[b + 2 * n]);
            out.u_p.push(v[b + 2 * n + 1..b + 3 * n + 1].to_vec());
            out.du_p.push(v[b + 3 * n + 1..b + 4 * n + 1].to_vec());
        }
        out
    }
}

/// Integrates the frequency integrand over a path family.
pub struct SpectralEvaluator<'a> {
    pub params: &'a FluidParams,
    pub consts: &'a DerivedConstants,
    pub cutoffs: CutoffSpec,
    pub mid_abscissa: f64,
    pub y_top: f64,
    pub opts: SpectralOptions,
}

impl<'a> SpectralEvaluator<'a> {
    pub fn new(
        params: &'a FluidParams,
        consts: &'a DerivedConstants,
        calib: &FrequencyCalibration,
        opts: SpectralOptions,
    ) -> Result<Self> {
        Ok(SpectralEvaluator {
            params,
            consts,
            cutoffs: CutoffSpec::new(calib.a0, calib.a_inf)?,
            mid_abscissa: calib.mid_abscissa,
            y_top: calib.y_top,
            opts,
        })
    }

    fn ctx<'b>(&'b self, xi: &'b [f64], d_hat: C64, force: Option<&'b SeparableForce>, probes: &'b [Probe]) -> Ctx<'b> {
        Ctx {
            params: self.params,
            consts: self.consts,
            xi,
            a: xi.iter().map(|x| x * x).sum::<f64>().sqrt(),
            d_hat,
            force,
            probes,
            quad: self.opts.quad,
        }
    }

    /// Band value without cutoff weights, through the chosen path family.
    pub fn band_value(
        &self,
        choice: PathChoice,
        xi: &[f64],
        d_hat: C64,
        force: Option<&SeparableForce>,
        t: f64,
        probes: &[Probe],
    ) -> Result<FrequencyValues> {
        let ctx = self.ctx(xi, d_hat, force, probes);
        if ctx.a <= 0.0 {
            return Err(Error::InvalidParams("band values need A > 0".into()));
        }
        let v = match choice {
            PathChoice::Low => {
                let paths = build_low_paths(self.consts, ctx.a)?;
                let mut v = path_integral(&ctx, &paths.sweep(), t, self.opts.rel_tol)?;
                let res = residue_terms(&ctx, t)?;
                for (x, y) in v.iter_mut().zip(&res) {
                    *x += y;
                }
                v
            }
            PathChoice::High => {
                let paths = build_high_paths(self.consts, self.mid_abscissa, self.y_top)?;
                path_integral(&ctx, &paths.sweep(), t, self.opts.rel_tol)?
            }
            PathChoice::Gamma0 => path_integral(&ctx, &build_gamma0(self.consts), t, self.opts.rel_tol)?,
        };
        Ok(FrequencyValues::unpack(&v, ctx.n(), probes.len()))
    }

    /// Cutoff-weighted sum over the bands selected by `mask`.
    pub fn evaluate(
        &self,
        xi: &[f64],
        d_hat: C64,
        force: Option<&SeparableForce>,
        mask: BandMask,
        t: f64,
        probes: &[Probe],
    ) -> Result<FrequencyValues> {
        let n = xi.len() + 1;
        let a = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let w = mask.apply(self.cutoffs.weights(a));
        let mut total = FrequencyValues::unpack(&vec![ZERO; 1 + probes.len() * (4 * n + 1)], n, probes.len());
        if a == 0.0 {
            if force.is_some() {
                return Err(Error::InvalidParams("the zero frequency is not supported with a body force".into()));
            }
            let z = zero_frequency(self.params, self.consts, d_hat, n, probes);
            add_scaled(&mut total, &z, w[0] + w[1] + w[2]);
            return Ok(total);
        }
        if w[0] > 0.0 {
            let v = self.band_value(PathChoice::Low, xi, d_hat, force, t, probes)?;
            add_scaled(&mut total, &v, w[0]);
        }
        if w[1] + w[2] > 0.0 {
            let v = self.band_value(PathChoice::High, xi, d_hat, force, t, probes)?;
            add_scaled(&mut total, &v, w[1] + w[2]);
        }
        Ok(total)
    }
}

fn add_scaled(total: &mut FrequencyValues, v: &FrequencyValues, w: f64) {
    total.eta += v.eta * w;
    let pairs = [
        (&mut total.u, &v.u),
        (&mut total.du, &v.du),
        (&mut total.u_p, &v.u_p),
        (&mut total.du_p, &v.du_p),
    ];
    for (dst, src) in pairs {
        for (d, s) in dst.iter_mut().zip(src) {
            for (x, y) in d.iter_mut().zip(s) {
                *x += y * w;
            }
        }
    }
    for (x, y) in total.p.iter_mut().zip(&v.p) {
        *x += y * w;
    }
}

/// At `ξ′ = 0` the height is conserved, the velocity vanishes, and the
/// pressure is the hydrostatic response `∓ρ±α d̂`.
fn zero_frequency(params: &FluidParams, consts: &DerivedConstants, d_hat: C64, n: usize, probes: &[Probe]) -> FrequencyValues {
    FrequencyValues {
        eta: d_hat,
        u: vec![vec![ZERO; n]; probes.len()],
        du: vec![vec![ZERO; n]; probes.len()],
        p: probes
            .iter()
            .map(|p| -d_hat * (p.side.sign() * params.rho(p.side) * consts.alpha))
            .collect(),
        u_p: vec![vec![ZERO; n]; probes.len()],
        du_p: vec![vec![ZERO; n]; probes.len()],
    }
}

fn path_integral(ctx: &Ctx, path: &ContourPath, t: f64, rel_tol: f64) -> Result<Vec<C64>> {
    let scale = ctx.scale();
    if scale == 0.0 {
        return Ok(vec![ZERO; ctx.dim()]);
    }
    let r = integrate_exp_vec(path, t, ctx.dim(), |lam, out| ctx.fill(lam, None, out), rel_tol * scale)?;
    Ok(r.value)
}

/// `e^{λ±t}·(integrand numerator)/∂_λL` at both slow roots.
fn residue_terms(ctx: &Ctx, t: f64) -> Result<Vec<C64>> {
    let mut out = vec![ZERO; ctx.dim()];
    if ctx.scale() == 0.0 {
        return Ok(out);
    }
    let roots = find_roots(ctx.params, ctx.consts, ctx.a)?;
    let mut buf = vec![ZERO; ctx.dim()];
    for lam in [roots.lambda_plus, roots.lambda_minus] {
        let dl = l_prime_at_root(ctx.params, ctx.consts, ctx.a, lam)?;
        ctx.fill(lam, Some(dl.inv()), &mut buf)?;
        let e = (lam * t).exp();
        for (o, v) in out.iter_mut().zip(&buf) {
            *o += v * e;
        }
    }
    Ok(out)
}

/// `∂_λL` at a zero of `𝓛_A`, through the factorization.
fn l_prime_at_root(params: &FluidParams, consts: &DerivedConstants, a: f64, lam: C64) -> Result<C64> {
    let (s, d) = eval_core_with_derivatives(params, consts, a, lam)?;
    Ok((s.d_plus + s.d_minus) * (params.rho_plus + params.rho_minus) * d.dscript_l)
}

/// `(1/2πi)∫_path e^{λt}(F/L) dλ · ẑ`.
pub fn eta_hat_component(
    params: &FluidParams,
    consts: &DerivedConstants,
    a: f64,
    t: f64,
    z_hat: C64,
    path: &ContourPath,
    tol: f64,
) -> Result<C64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParams(format!("need A > 0, got {a}")));
    }
    if z_hat == ZERO {
        return Ok(ZERO);
    }
    let xi = [a];
    let ctx = Ctx {
        params,
        consts,
        xi: &xi,
        a,
        d_hat: z_hat,
        force: None,
        probes: &[],
        quad: AxialQuadrature::default(),
    };
    Ok(path_integral(&ctx, path, t, tol)?[0])
}

/// The two residue contributions `e^{λ±t}F(A,λ±)/∂_λL(A,λ±)` of `F/L`.
pub fn residue_mode(params: &FluidParams, consts: &DerivedConstants, a: f64, t: f64) -> Result<(C64, C64)> {
    let roots = find_roots(params, consts, a)?;
    let mut out = [ZERO; 2];
    for (o, lam) in out.iter_mut().zip([roots.lambda_plus, roots.lambda_minus]) {
        let s = eval_core_at(params, consts, a, lam)?;
        *o = (lam * t).exp() * s.f / l_prime_at_root(params, consts, a, lam)?;
    }
    Ok((out[0], out[1]))
}

fn single_probe(
    params: &FluidParams,
    consts: &DerivedConstants,
    xi: &[f64],
    probe: Probe,
    t: f64,
    z_hat: C64,
    path: &ContourPath,
    tol: f64,
) -> Result<FrequencyValues> {
    let a = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(a > 0.0) {
        return Err(Error::InvalidParams("need A > 0".into()));
    }
    let probes = [probe];
    let ctx = Ctx {
        params,
        consts,
        xi,
        a,
        d_hat: z_hat,
        force: None,
        probes: &probes,
        quad: AxialQuadrature::default(),
    };
    let v = path_integral(&ctx, path, t, tol)?;
    Ok(FrequencyValues::unpack(&v, ctx.n(), 1))
}

/// Component `m` (normal component last) of the interface-driven velocity.
#[allow(clippy::too_many_arguments)]
pub fn u_hat_component(
    params: &FluidParams,
    consts: &DerivedConstants,
    xi: &[f64],
    x_n: f64,
    t: f64,
    z_hat: C64,
    path: &ContourPath,
    m: usize,
    side: Side,
    tol: f64,
) -> Result<C64> {
    if m > xi.len() {
        return Err(Error::InvalidParams(format!("component {m} out of range")));
    }
    let v = single_probe(params, consts, xi, Probe::new(side, x_n)?, t, z_hat, path, tol)?;
    Ok(v.u[0][m])
}

/// Pressure `γ± e^{∓A x_N}` of the interface-driven part.
#[allow(clippy::too_many_arguments)]
pub fn pressure_hat_component(
    params: &FluidParams,
    consts: &DerivedConstants,
    xi: &[f64],
    x_n: f64,
    t: f64,
    z_hat: C64,
    path: &ContourPath,
    side: Side,
    tol: f64,
) -> Result<C64> {
    let v = single_probe(params, consts, xi, Probe::new(side, x_n)?, t, z_hat, path, tol)?;
    Ok(v.p[0])
}

/// Frequency nodes and normal probes of a spectral run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub nodes: Vec<Vec<f64>>,
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub t: f64,
    pub xi: Vec<Vec<f64>>,
    pub bands: Vec<String>,
    pub probes: Vec<Probe>,
    pub values: Vec<FrequencyValues>,
}

fn band_label(w: [f64; 3]) -> String {
    let names = ["low", "mid", "high"];
    let v: Vec<&str> = names.iter().zip(w).filter(|(_, x)| *x > 0.0).map(|(n, _)| *n).collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join("+")
    }
}

impl SpectralField {
    /// Rows `(band, ξ…, x_N, component, side, re, im, t)`. The height is
    /// written as component `eta` at `x_N = 0` with side `interface`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        let dim = self.xi.first().map(|x| x.len()).unwrap_or(1);
        if header {
            let xs: Vec<String> = (1..=dim).map(|k| format!("xi{k}")).collect();
            writeln!(w, "band,{},x_N,component,side,re,im,t", xs.join(","))?;
        }
        for (k, v) in self.values.iter().enumerate() {
            let xs: Vec<String> = self.xi[k].iter().map(|x| format!("{x:.17e}")).collect();
            let xs = xs.join(",");
            let band = &self.bands[k];
            let t = self.t;
            writeln!(w, "{band},{xs},0,eta,interface,{:.17e},{:.17e},{t:.17e}", v.eta.re, v.eta.im)?;
            for (j, pr) in self.probes.iter().enumerate() {
                let side = pr.side.label();
                let x = pr.x_n;
                for (c, u) in v.u[j].iter().enumerate() {
                    writeln!(w, "{band},{xs},{x:.17e},u{},{side},{:.17e},{:.17e},{t:.17e}", c + 1, u.re, u.im)?;
                }
                writeln!(w, "{band},{xs},{x:.17e},p,{side},{:.17e},{:.17e},{t:.17e}", v.p[j].re, v.p[j].im)?;
            }
        }
        Ok(())
    }
}

/// Evaluate the data-driven solution on a frequency grid at each time.
pub fn evolve_spectral(
    eval: &SpectralEvaluator,
    data: &DrivingData,
    times: &[f64],
    grid: &SpectralGrid,
) -> Result<Vec<SpectralField>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParams("times must be positive and ascending".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let results: Vec<(usize, Result<FrequencyValues>)> = grid
            .nodes
            .par_iter()
            .enumerate()
            .map(|(k, xi)| {
                let d_hat = data.height.hat(xi);
                let force = data.force.as_ref().map(|f| f.at(xi));
                (k, eval.evaluate(xi, d_hat, force.as_ref(), data.bands, t, &grid.probes))
            })
            .collect();
        let mut values = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (k, r) in results {
            match r {
                Ok(v) => values.push(v),
                Err(e) => failures.push(format!("xi={:?}: {e}", grid.nodes[k])),
            }
        }
        if !failures.is_empty() {
            let shown: Vec<String> = failures.iter().take(5).cloned().collect();
            return Err(Error::QuadratureFailure(format!(
                "{} of {} frequencies failed at t={t}: {}",
                failures.len(),
                grid.nodes.len(),
                shown.join("; ")
            )));
        }
        let bands = grid
            .nodes
            .iter()
            .map(|xi| {
                let a = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                band_label(data.bands.apply(eval.cutoffs.weights(a)))
            })
            .collect();
        out.push(SpectralField {
            t,
            xi: grid.nodes.clone(),
            bands,
            probes: grid.probes.clone(),
            values,
        });
    }
    Ok(out)
}

/// Relative residual of the stress-jump rows of the interface-driven part,
/// `[[μ(∂_N û_j + iξ_j û_N)]] = 0` and `[[2μ∂_N û_N − 𝔭̂]] = (ω + σA²)η̂`,
/// per frequency node. Needs both one-sided probes at `x_N = 0`.
pub fn stress_jump_residual(field: &SpectralField, params: &FluidParams, consts: &DerivedConstants) -> Result<Vec<f64>> {
    let find = |side: Side| {
        field
            .probes
            .iter()
            .position(|p| p.side == side && p.x_n == 0.0)
            .ok_or_else(|| Error::InvalidParams("stress residual needs interface probes on both sides".into()))
    };
    let (ip, im) = (find(Side::Plus)?, find(Side::Minus)?);
    let i = C64::i();
    Ok(field
        .xi
        .iter()
        .zip(&field.values)
        .map(|(xi, v)| {
            let n = xi.len();
            let a2: f64 = xi.iter().map(|x| x * x).sum();
            let hyp = |k: usize| -> (Vec<C64>, Vec<C64>) {
                let u = v.u[k].iter().zip(&v.u_p[k]).map(|(x, y)| x - y).collect();
                let du = v.du[k].iter().zip(&v.du_p[k]).map(|(x, y)| x - y).collect();
                (u, du)
            };
            let (up, dup) = hyp(ip);
            let (um, dum) = hyp(im);
            let (mp, mm) = (params.mu_plus, params.mu_minus);
            let mut worst = 0.0f64;
            for j in 0..n {
                let tp = (dup[j] + i * xi[j] * up[n]) * mp;
                let tm = (dum[j] + i * xi[j] * um[n]) * mm;
                let scale = tp.norm() + tm.norm();
                if scale > 0.0 {
                    worst = worst.max((tp - tm).norm() / scale);
                }
            }
            let sp = dup[n] * (2.0 * mp);
            let sm = dum[n] * (2.0 * mm);
            let rhs = v.eta * (consts.omega + params.sigma * a2);
            let res = sp - v.p[ip] - sm + v.p[im] - rhs;
            let scale = sp.norm() + sm.norm() + v.p[ip].norm() + v.p[im].norm() + rhs.norm();
            if scale > 0.0 {
                worst = worst.max(res.norm() / scale);
            }
            worst
        })
        .collect())
}
