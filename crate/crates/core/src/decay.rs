//! Decay exponents: predicted rates for each part of the solution, grid
//! norms of computed fields, and log-log fits over a time window.

use crate::error::{Error, Result};
use crate::kernels::{BandMask, DrivingData, Probe, SpectralEvaluator};
use crate::quadrature::{adaptive_vec, gl, AdaptiveOptions, GlRule};
use crate::roots::{find_roots, log_spaced};
use crate::symbols::Side;
use crate::transform::{inverse_1d, FrequencyGrid, PhysicalField};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    /// Interface height.
    H,
    /// Velocity.
    U,
}

impl Component {
    pub fn label(self) -> &'static str {
        match self {
            Component::H => "H",
            Component::U => "U",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    /// Low-band residue modes.
    Res,
    /// Low-band remainder after the residues.
    Tilde,
    /// Force-driven part with homogeneous interface data.
    Parabolic,
    /// Middle and high bands.
    High,
    /// Whole solution.
    Combined,
}

/// Lebesgue exponents serialize as numbers, with `"inf"` for `∞`.
mod lebesgue {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*q)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad exponent {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRateSpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    #[serde(with = "lebesgue")]
    pub q: f64,
    pub component: Component,
    pub part: Part,
    #[serde(default)]
    pub gamma1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictedRate {
    Algebraic(f64),
    Exponential,
}

impl PredictedRate {
    pub fn exponent(self) -> Option<f64> {
        match self {
            PredictedRate::Algebraic(r) => Some(r),
            PredictedRate::Exponential => None,
        }
    }
}

fn exponent_label(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

impl DecayRateSpec {
    pub fn new(n: usize, p: f64, q: f64, component: Component, part: Part) -> Result<Self> {
        let s = DecayRateSpec {
            n,
            p,
            q,
            component,
            part,
            gamma1: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Upper end of the open interval allowed for `γ₁`.
    pub fn gamma1_bound(&self) -> f64 {
        1f64.min(2.0 * (self.n as f64 - 1.0) * (1.0 / self.p - 0.5))
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1.unwrap_or(0.9 * self.gamma1_bound())
    }

    fn low_band(&self) -> bool {
        matches!(self.part, Part::Res | Part::Tilde | Part::Combined)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!("N must be at least 2, got {}", self.n)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) || self.q.is_nan() || self.q < self.p {
            return Err(Error::HypothesisViolation(format!(
                "need 1 <= p <= q, got p={}, q={}",
                self.p, self.q
            )));
        }
        if self.low_band() {
            if !(self.p < 2.0 && self.q >= 2.0) {
                return Err(Error::HypothesisViolation(format!(
                    "low-band rates need 1 <= p < 2 <= q, got p={}, q={}",
                    self.p,
                    exponent_label(self.q)
                )));
            }
            if let Some(g) = self.gamma1 {
                let hi = self.gamma1_bound();
                if !(g > 0.0 && g < hi) {
                    return Err(Error::HypothesisViolation(format!("gamma1={g} outside (0, {hi})")));
                }
            }
        }
        Ok(())
    }

    /// File stem `decay_{component}_{p}_{q}`.
    pub fn file_stem(&self) -> String {
        format!(
            "decay_{}_{}_{}",
            self.component.label(),
            exponent_label(self.p),
            exponent_label(self.q)
        )
    }
}

/// Rate `r` in `‖·‖_q ≲ t^{−r}‖data‖_p` for the selected part, or the
/// exponential flag for the middle and high bands.
pub fn predicted_rate(spec: &DecayRateSpec) -> Result<PredictedRate> {
    spec.validate()?;
    let n = spec.n as f64;
    let d = 1.0 / spec.p - 1.0 / spec.q;
    let res_h = 4.0 * (n - 1.0) / 5.0 * d;
    let res = match spec.component {
        Component::H => res_h,
        Component::U => res_h + 0.8 * (0.5 - 1.0 / spec.q),
    };
    let parabolic = n / 2.0 * d;
    let tilde = match spec.component {
        Component::H => (n - 1.0) / 2.0 * d + 0.75 * spec.gamma1(),
        Component::U => parabolic,
    };
    Ok(match spec.part {
        Part::Res => PredictedRate::Algebraic(res),
        Part::Tilde => PredictedRate::Algebraic(tilde),
        Part::Parabolic => PredictedRate::Algebraic(parabolic),
        Part::High => PredictedRate::Exponential,
        Part::Combined => PredictedRate::Algebraic(res.min(tilde).min(parabolic)),
    })
}

/// Grid `L_q` norm of each field; `q = ∞` gives the largest magnitude.
pub fn lq_time_series(fields: &[PhysicalField], q: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParams(format!("q must be at least 1, got {q}")));
    }
    let mut times = Vec::with_capacity(fields.len());
    let mut norms = Vec::with_capacity(fields.len());
    for f in fields {
        times.push(f.t);
        norms.push(grid_lq(&f.x, &f.values, q)?);
    }
    Ok((times, norms))
}

fn grid_lq(x: &[f64], v: &[f64], q: f64) -> Result<f64> {
    if x.len() != v.len() || x.is_empty() {
        return Err(Error::InvalidParams("field grid and values differ in length".into()));
    }
    if q.is_infinite() {
        return Ok(v.iter().fold(0.0f64, |m, y| m.max(y.abs())));
    }
    let dx = if x.len() > 1 { x[1] - x[0] } else { 1.0 };
    if x.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs()) {
        return Err(Error::InvalidParams("L_q grid norms need a uniform grid".into()));
    }
    Ok((v.iter().map(|y| y.abs().powf(q)).sum::<f64>() * dx).powf(1.0 / q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow {
            t_min: 1e2,
            t_max: 1e4,
        }
    }
}

impl FitWindow {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min * (1.0 - 1e-12) && t <= self.t_max * (1.0 + 1e-12)
    }

    /// `count` log-spaced times spanning the window.
    pub fn samples(&self, count: usize) -> Vec<f64> {
        log_spaced(self.t_min, self.t_max, count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// `r` in `norm ≈ C t^{−r}`.
    pub exponent: f64,
    pub log_prefactor: f64,
    /// RMS residual of the log-log line.
    pub residual: f64,
    /// RMS residual of the log-linear line over the same points.
    pub loglin_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    /// `γ` in `norm ≈ C e^{−γt}`.
    pub gamma: f64,
    pub log_prefactor: f64,
    pub residual: f64,
    pub points: usize,
}

/// Least squares line through `(x, y)`: slope, intercept, RMS residual.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (slope, icpt, (rss / n).sqrt())
}

fn window_points(times: &[f64], norms: &[f64], window: FitWindow) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != norms.len() {
        return Err(Error::InvalidParams("times and norms differ in length".into()));
    }
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(norms)
        .filter(|(t, _)| window.contains(**t))
        .map(|(t, v)| (*t, *v))
        .unzip();
    if t.len() < 3 {
        return Err(Error::InvalidParams(format!("only {} samples inside the fit window", t.len())));
    }
    if let Some(bad) = v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParams(format!("norm {bad} inside the fit window is not positive")));
    }
    Ok((t, v))
}

/// Default factor by which the log-linear residual must undercut the
/// log-log residual before the decay is declared non-polynomial.
pub const DEFAULT_EXP_MARGIN: f64 = 4.0;

pub fn fit_rate(times: &[f64], norms: &[f64], window: FitWindow) -> Result<PowerFit> {
    fit_rate_with(times, norms, window, DEFAULT_EXP_MARGIN)
}

/// Slope of `log norm` against `log t` over the window.
pub fn fit_rate_with(times: &[f64], norms: &[f64], window: FitWindow, margin: f64) -> Result<PowerFit> {
    let (t, v) = window_points(times, norms, window)?;
    let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let lt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let (slope, icpt, res) = line_fit(&lt, &lv);
    let (_, _, lin) = line_fit(&t, &lv);
    if lin * margin < res {
        return Err(Error::NonPolynomialDecay { linear: lin, loglog: res });
    }
    Ok(PowerFit {
        exponent: -slope,
        log_prefactor: icpt,
        residual: res,
        loglin_residual: lin,
        points: t.len(),
    })
}

/// Slope of `log norm` against `t` over the window.
pub fn fit_exponential(times: &[f64], norms: &[f64], window: FitWindow) -> Result<ExpFit> {
    let (t, v) = window_points(times, norms, window)?;
    let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let (slope, icpt, res) = line_fit(&t, &lv);
    Ok(ExpFit {
        gamma: -slope,
        log_prefactor: icpt,
        residual: res,
        points: t.len(),
    })
}

/// Largest ratio `(norm(t₂)/norm(t₁))/e^{−γ(t₂−t₁)}` over consecutive samples
/// in the window. Values at most `1 + tol` mean the envelope holds.
pub fn envelope_excess(times: &[f64], norms: &[f64], window: FitWindow, gamma: f64) -> Result<f64> {
    let (t, v) = window_points(times, norms, window)?;
    Ok(t.windows(2)
        .zip(v.windows(2))
        .map(|(tt, vv)| (vv[1] / vv[0]) / (-gamma * (tt[1] - tt[0])).exp())
        .fold(0.0f64, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub spec: DecayRateSpec,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub window: FitWindow,
    pub fitted_exponent: Option<f64>,
    pub predicted_exponent: Option<f64>,
    /// Fitted `γ` when the prediction is exponential.
    pub fitted_gamma: Option<f64>,
    pub tolerance: f64,
    pub residual: f64,
    pub verdict: Verdict,
    pub note: Option<String>,
}

/// Default absolute tolerance on the fitted exponent.
pub const DEFAULT_TOLERANCE: f64 = 0.08;

/// Fit the series and compare against the predicted rate. Algebraic
/// predictions pass when the fitted exponent is within `tolerance`;
/// exponential ones pass when the fitted `γ` is positive and the envelope
/// holds within `tolerance` relative.
pub fn decay_report(
    spec: &DecayRateSpec,
    times: &[f64],
    norms: &[f64],
    window: FitWindow,
    tolerance: f64,
) -> Result<DecayReport> {
    let predicted = predicted_rate(spec)?;
    let mut report = DecayReport {
        spec: *spec,
        times: times.to_vec(),
        norms: norms.to_vec(),
        window,
        fitted_exponent: None,
        predicted_exponent: predicted.exponent(),
        fitted_gamma: None,
        tolerance,
        residual: f64::NAN,
        verdict: Verdict::Fail,
        note: None,
    };
    match predicted {
        PredictedRate::Algebraic(r) => match fit_rate(times, norms, window) {
            Ok(fit) => {
                report.fitted_exponent = Some(fit.exponent);
                report.residual = fit.residual;
                if (fit.exponent - r).abs() <= tolerance {
                    report.verdict = Verdict::Pass;
                }
            }
            Err(e @ Error::NonPolynomialDecay { .. }) => report.note = Some(e.to_string()),
            Err(e) => return Err(e),
        },
        PredictedRate::Exponential => {
            let fit = fit_exponential(times, norms, window)?;
            report.fitted_gamma = Some(fit.gamma);
            report.residual = fit.residual;
            let excess = envelope_excess(times, norms, window, fit.gamma)?;
            report.note = Some(format!("envelope excess {excess:.6}"));
            if fit.gamma > 0.0 && excess <= 1.0 + tolerance {
                report.verdict = Verdict::Pass;
            }
        }
    }
    Ok(report)
}

impl DecayReport {
    /// Rows `t,norm`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,norm")?;
        for (t, v) in self.times.iter().zip(&self.norms) {
            writeln!(w, "{t:.17e},{v:.17e}")?;
        }
        Ok(())
    }
}

/// Resolution knobs for norm measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    /// Relative tolerance of the frequency integral in the Parseval route.
    pub rel_tol: f64,
    /// Gauss–Legendre order per normal-direction panel.
    pub xn_order: usize,
    /// Ratio between consecutive geometric panels in `x_N`.
    pub xn_ratio: f64,
    /// Relative change allowed when the physical domain is doubled.
    pub domain_tol: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            rel_tol: 1e-5,
            xn_order: 8,
            xn_ratio: 4.0,
            domain_tol: 1e-2,
        }
    }
}

impl NormOptions {
    /// Half the normal-direction resolution and a looser frequency tolerance.
    pub fn fast() -> Self {
        NormOptions {
            rel_tol: 1e-4,
            xn_order: 4,
            xn_ratio: 4.0,
            domain_tol: 2e-2,
        }
    }
}

/// Frequency magnitude beyond which Gaussian data are below `1e−9`
/// relative (squared, below `1e−18`).
fn data_extent(data: &DrivingData) -> f64 {
    use crate::transform::DataPreset;
    let ext = |p: &DataPreset| match p {
        DataPreset::Zero => 0.0,
        DataPreset::Gaussian { width, .. } => 2.0 * (9.0 * 10f64.ln()).sqrt() * 2f64.sqrt() / width,
    };
    let mut a = ext(&data.height);
    if let Some(f) = &data.force {
        for c in &f.components {
            a = a.max(ext(&c.tangential));
        }
    }
    a
}

/// `A` at which the slow mode has decayed by `e^{−1}` at time `t`, capped at
/// the low-band threshold.
pub fn low_band_scale(eval: &SpectralEvaluator, t: f64) -> Result<f64> {
    let a0 = eval.cutoffs.a0;
    let rate = |a: f64| -> Result<f64> { Ok(find_roots(eval.params, eval.consts, a)?.lambda_plus.re * t) };
    let hi = a0 * 0.999;
    if rate(hi)? > -1.0 {
        return Ok(hi);
    }
    let (mut lo, mut up) = (1e-12f64.max(hi * 1e-12), hi);
    if rate(lo)? < -1.0 {
        return Ok(lo);
    }
    for _ in 0..60 {
        let mid = (lo * up).sqrt();
        if rate(mid)? > -1.0 {
            lo = mid;
        } else {
            up = mid;
        }
        if up / lo < 1.0 + 1e-6 {
            break;
        }
    }
    Ok((lo * up).sqrt())
}

/// Normal-direction nodes and weights on one side for frequency `a` at time
/// `t`. The first panel resolves the `e^{−Bx}` layer, whose length is about
/// `min(A^{−1/4}, √t)` for the modes alive at `t`; geometric panels follow
/// out to forty `e^{−Ax}` lengths.
fn xn_nodes(a: f64, t: f64, side: Side, opts: &NormOptions) -> Vec<(Probe, f64)> {
    let scale = 1.0 / a.max(1e-300);
    let x0 = 0.1 * scale.min(a.powf(-0.25)).min(t.sqrt()).min(1.0f64.max(scale));
    let x_end = 40.0 * scale;
    let rule = GlRule::new(opts.xn_order.max(1));
    let mut edges = vec![0.0, x0];
    while *edges.last().unwrap() < x_end {
        let next = edges.last().unwrap() * opts.xn_ratio;
        edges.push(next);
    }
    let mut out = Vec::new();
    for w in edges.windows(2) {
        for (x, wt) in rule.mapped(w[0], w[1]) {
            out.push((
                Probe {
                    side,
                    x_n: side.sign() * x,
                },
                wt,
            ));
        }
    }
    out
}

/// Breakpoints in `s = √A` for the Parseval integral at time `t`.
fn parseval_breaks(eval: &SpectralEvaluator, t: f64, a_data: f64) -> Result<Vec<f64>> {
    let ac = low_band_scale(eval, t)?;
    let c = &eval.cutoffs;
    let mut br: Vec<f64> = vec![0.0, a_data];
    for k in -3..=4 {
        br.push(ac * 2f64.powi(k));
    }
    br.extend([c.a0, 2.0 * c.a0, c.a_inf, 2.0 * c.a_inf]);
    let mut s: Vec<f64> = br.into_iter().filter(|a| *a >= 0.0 && *a <= a_data).map(f64::sqrt).collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    Ok(s)
}

/// Squared `L₂` norm density at frequency `A`: `Σ|η̂|²` or
/// `∫ Σ_m |û_m|² dx_N`.
fn l2_density(eval: &SpectralEvaluator, data: &DrivingData, component: Component, dim: usize, a: f64, t: f64, opts: &NormOptions) -> Result<f64> {
    let mut xi = vec![0.0; dim];
    xi[0] = a;
    let d_hat = data.height.hat(&xi);
    let force = data.force.as_ref().map(|f| f.at(&xi));
    match component {
        Component::H => {
            let v = eval.evaluate(&xi, d_hat, force.as_ref(), data.bands, t, &[])?;
            Ok(v.eta.norm_sqr())
        }
        Component::U => {
            let mut nodes = xn_nodes(a, t, Side::Plus, opts);
            nodes.extend(xn_nodes(a, t, Side::Minus, opts));
            let probes: Vec<Probe> = nodes.iter().map(|n| n.0).collect();
            let v = eval.evaluate(&xi, d_hat, force.as_ref(), data.bands, t, &probes)?;
            Ok(nodes
                .iter()
                .zip(&v.u)
                .map(|((_, w), u)| w * u.iter().map(|z| z.norm_sqr()).sum::<f64>())
                .sum())
        }
    }
}

/// `‖·‖_{L₂}` at time `t` through Parseval, integrating the radial density
/// in `s = √A` with breakpoints adapted to the slow-mode scale at `t`.
/// Data must be radial in `ξ′` when `N ≥ 3`.
pub fn l2_norm_spectral(
    eval: &SpectralEvaluator,
    data: &DrivingData,
    component: Component,
    n: usize,
    t: f64,
    opts: &NormOptions,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParams("N must be at least 2".into()));
    }
    if n > 2 && data.force.is_some() {
        return Err(Error::InvalidParams("spectral norms with a body force need N = 2".into()));
    }
    let dim = n - 1;
    let a_data = data_extent(data);
    if a_data == 0.0 {
        return Ok(0.0);
    }
    // Surface measure of the unit sphere in R^{N−1} over (2π)^{N−1}.
    let sphere = match dim {
        1 => 2.0,
        d => 2.0 * PI.powf(d as f64 / 2.0) / gamma_fn(d as f64 / 2.0),
    };
    let measure = sphere / (2.0 * PI).powi(dim as i32);
    let breaks = parseval_breaks(eval, t, a_data)?;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let density = |s: f64, out: &mut [C64]| {
        if failure.borrow().is_some() || s == 0.0 {
            out[0] = C64::new(0.0, 0.0);
            return;
        }
        let a = s * s;
        match l2_density(eval, data, component, dim, a, t, opts) {
            Ok(v) => out[0] = C64::new(2.0 * s * a.powi(dim as i32 - 1) * v, 0.0),
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                out[0] = C64::new(0.0, 0.0);
            }
        }
    };
    // Coarse pass for the tolerance scale; segments far below it keep their
    // coarse value.
    let rule = gl(16);
    let mut buf = [C64::new(0.0, 0.0)];
    let mut coarse = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        let mut c = 0.0;
        for (s, wt) in rule.mapped(w[0], w[1]) {
            density(s, &mut buf);
            c += wt * buf[0].re;
        }
        coarse.push(c);
    }
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let scale: f64 = coarse.iter().sum();
    if scale <= 0.0 {
        return Ok(0.0);
    }
    let tol = opts.rel_tol * scale / (breaks.len() as f64);
    let mut total = 0.0;
    for (w, c) in breaks.windows(2).zip(&coarse) {
        if c.abs() <= 1e-3 * tol {
            total += c;
            continue;
        }
        let r = adaptive_vec(
            w[0],
            w[1],
            1,
            density,
            AdaptiveOptions {
                abs_tol: tol,
                max_depth: 40,
                // Each density value carries the contour tolerance as noise.
                roundoff: (10.0 * eval.opts.rel_tol).max(1e-14),
                ..Default::default()
            },
        )?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        total += r.value[0].re;
    }
    Ok((measure * total.max(0.0)).sqrt())
}

fn gamma_fn(x: f64) -> f64 {
    // Only half-integers and integers are needed.
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as u64).map(|k| k as f64).product()
    } else {
        let mut v = PI.sqrt();
        let mut y = 0.5;
        while y < x - 1e-12 {
            v *= y;
            y += 1.0;
        }
        v
    }
}

/// A time-adapted uniform frequency grid for physical fields in `N = 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedGrid {
    pub grid: FrequencyGrid,
    /// Half-length of the physical period.
    pub half_period: f64,
}

/// Frequency cutoff: twice the largest scanned `A` at which the height
/// transform exceeds `1e−8` of its scanned maximum.
fn frequency_cutoff(eval: &SpectralEvaluator, data: &DrivingData, t: f64) -> Result<f64> {
    let a_data = data_extent(data);
    let mut vals = Vec::new();
    let mut a = a_data;
    for _ in 0..48 {
        let d_hat = data.height.hat(&[a]);
        let force = data.force.as_ref().map(|f| f.at(&[a]));
        let v = eval.evaluate(&[a], d_hat, force.as_ref(), data.bands, t, &[])?;
        vals.push((a, v.eta.norm()));
        a *= 0.5;
    }
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.1));
    if peak == 0.0 {
        return Ok(a_data);
    }
    let top = vals.iter().find(|v| v.1 > 1e-8 * peak).map(|v| v.0).unwrap_or(a_data);
    Ok((2.0 * top).min(a_data))
}

/// Group-velocity estimate of how far the slow modes have travelled.
fn travel_distance(eval: &SpectralEvaluator, t: f64) -> Result<f64> {
    let ac = low_band_scale(eval, t)?;
    let h = 1e-3 * ac;
    let up = find_roots(eval.params, eval.consts, ac + h)?.lambda_plus.im;
    let dn = find_roots(eval.params, eval.consts, ac - h)?.lambda_plus.im;
    Ok(t * ((up - dn) / (2.0 * h)).abs())
}

fn uniform_grid(xi_max: f64, half_period: f64) -> Result<AdaptedGrid> {
    // Period 2·half_period = 2π/Δξ and Δξ = 2ξmax/count.
    let mut count = (2.0 * xi_max * half_period / PI).ceil() as usize;
    count = count.max(64);
    count += count % 2;
    let grid = FrequencyGrid::uniform(count, xi_max)?;
    let half_period = PI / grid.spacing().unwrap();
    Ok(AdaptedGrid { grid, half_period })
}

/// Physical fields at time `t` on a uniform grid: the height, or for the
/// velocity one field per probe and component (normal component last).
pub fn physical_fields(
    eval: &SpectralEvaluator,
    data: &DrivingData,
    t: f64,
    grid: &FrequencyGrid,
    component: Component,
    probes: &[Probe],
) -> Result<Vec<PhysicalField>> {
    let FrequencyGrid::Uniform { count, .. } = *grid else {
        return Err(Error::InvalidParams("physical fields need a uniform grid".into()));
    };
    let nodes = grid.nodes();
    let probes_used: &[Probe] = if component == Component::H { &[] } else { probes };
    // Hermitian data: evaluate the positive half and mirror.
    let half: Vec<Result<crate::kernels::FrequencyValues>> = nodes[count / 2..]
        .par_iter()
        .map(|&x| {
            let xi = [x];
            let d_hat = data.height.hat(&xi);
            let force = data.force.as_ref().map(|f| f.at(&xi));
            eval.evaluate(&xi, d_hat, force.as_ref(), data.bands, t, probes_used)
        })
        .collect();
    let half: Vec<crate::kernels::FrequencyValues> = half.into_iter().collect::<Result<_>>()?;
    let full = |pick: &dyn Fn(&crate::kernels::FrequencyValues) -> C64| -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); count];
        for (k, fv) in half.iter().enumerate() {
            let z = pick(fv);
            v[count / 2 + k] = z;
            v[count / 2 - 1 - k] = z.conj();
        }
        v
    };
    match component {
        Component::H => Ok(vec![inverse_1d(&full(&|f| f.eta), grid, t, "eta")?]),
        Component::U => {
            let mut out = Vec::new();
            for (j, pr) in probes.iter().enumerate() {
                for m in 0..2 {
                    let name = format!("u{}@{}{}", m + 1, pr.side.label(), pr.x_n);
                    out.push(inverse_1d(&full(&|f| f.u[j][m]), grid, t, &name)?);
                }
            }
            Ok(out)
        }
    }
}

/// Normal probes for velocity sup norms at time `t`: the interface and a
/// geometric set out to a few slow-mode decay lengths.
fn sup_probes(eval: &SpectralEvaluator, t: f64) -> Result<Vec<Probe>> {
    let ac = low_band_scale(eval, t)?;
    let mut out = Vec::new();
    for side in Side::BOTH {
        out.push(Probe { side, x_n: 0.0 });
        let mut x = 1e-2;
        while x < 4.0 / ac {
            out.push(Probe {
                side,
                x_n: side.sign() * x,
            });
            x *= 2.0;
        }
    }
    Ok(out)
}

/// Grid `L_q` norm in `N = 2` on a time-adapted uniform grid. The period is
/// doubled until the norm changes by less than `domain_tol`. Velocity norms
/// are supported for `q = ∞` only, as the largest magnitude over the normal
/// probes.
pub fn lq_norm_grid(
    eval: &SpectralEvaluator,
    data: &DrivingData,
    component: Component,
    q: f64,
    t: f64,
    opts: &NormOptions,
) -> Result<f64> {
    if component == Component::U && !q.is_infinite() {
        return Err(Error::InvalidParams("grid velocity norms support q = inf; use the spectral route for q = 2".into()));
    }
    if data_extent(data) == 0.0 {
        return Ok(0.0);
    }
    let xi_max = frequency_cutoff(eval, data, t)?;
    let width = match data.height {
        crate::transform::DataPreset::Gaussian { width, .. } => width,
        crate::transform::DataPreset::Zero => 1.0,
    };
    let mut half_period = 16.0 * travel_distance(eval, t)?.max(8.0 * width);
    let probes = if component == Component::U { sup_probes(eval, t)? } else { vec![] };
    let norm_on = |half_period: f64| -> Result<f64> {
        let g = uniform_grid(xi_max, half_period)?;
        let fields = physical_fields(eval, data, t, &g.grid, component, &probes)?;
        match component {
            Component::H => grid_lq(&fields[0].x, &fields[0].values, q),
            Component::U => {
                let mut sup = 0.0f64;
                for pair in fields.chunks(2) {
                    for (a, b) in pair[0].values.iter().zip(&pair[1].values) {
                        sup = sup.max(a.hypot(*b));
                    }
                }
                Ok(sup)
            }
        }
    };
    let mut prev = norm_on(half_period)?;
    for _ in 0..4 {
        half_period *= 2.0;
        let next = norm_on(half_period)?;
        if (next - prev).abs() <= opts.domain_tol * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureFailure(format!(
        "grid norm at t={t} did not settle under domain doubling"
    )))
}

/// Norm of `component` at each time: Parseval for `q = 2`, grids otherwise.
pub fn measure_series(
    eval: &SpectralEvaluator,
    data: &DrivingData,
    component: Component,
    n: usize,
    q: f64,
    times: &[f64],
    opts: &NormOptions,
) -> Result<Vec<f64>> {
    if q != 2.0 && n != 2 {
        return Err(Error::InvalidParams("grid norms with q != 2 need N = 2".into()));
    }
    times
        .par_iter()
        .map(|&t| {
            if q == 2.0 {
                l2_norm_spectral(eval, data, component, n, t, opts)
            } else {
                lq_norm_grid(eval, data, component, q, t, opts)
            }
        })
        .collect()
}

/// Mask used to isolate the decaying middle and high bands.
pub fn high_mask() -> BandMask {
    BandMask::only_high()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(q: f64, c: Component, part: Part) -> DecayRateSpec {
        DecayRateSpec::new(2, 1.0, q, c, part).unwrap()
    }

    #[test]
    fn predicted_examples() {
        let r = |s| predicted_rate(&s).unwrap().exponent().unwrap();
        assert!((r(spec(2.0, Component::H, Part::Res)) - 0.4).abs() < 1e-15);
        assert!((r(spec(f64::INFINITY, Component::H, Part::Res)) - 0.8).abs() < 1e-15);
        assert!((r(spec(2.0, Component::U, Part::Combined)) - 0.4).abs() < 1e-15);
        assert_eq!(
            predicted_rate(&spec(2.0, Component::H, Part::High)).unwrap(),
            PredictedRate::Exponential
        );
        // γ₁ default: 0.9·min{1, 2(N−1)(1/p−1/2)} = 0.9 here.
        let s = spec(2.0, Component::H, Part::Tilde);
        assert!((s.gamma1() - 0.9).abs() < 1e-15);
        assert!((r(s) - (0.25 + 0.675)).abs() < 1e-15);
    }

    #[test]
    fn hypothesis_checks() {
        assert!(matches!(
            DecayRateSpec::new(2, 2.0, 4.0, Component::H, Part::Res),
            Err(Error::HypothesisViolation(_))
        ));
        assert!(matches!(
            DecayRateSpec::new(2, 1.0, 1.5, Component::H, Part::Combined),
            Err(Error::HypothesisViolation(_))
        ));
        assert!(DecayRateSpec::new(2, 1.0, 1.5, Component::U, Part::Parabolic).is_ok());
        let mut s = spec(2.0, Component::H, Part::Tilde);
        s.gamma1 = Some(1.0);
        assert!(matches!(predicted_rate(&s), Err(Error::HypothesisViolation(_))));
        s.gamma1 = Some(0.5);
        assert!(predicted_rate(&s).is_ok());
    }

    #[test]
    fn serde_round_trip_with_infinite_q() {
        let s = spec(f64::INFINITY, Component::U, Part::Res);
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"inf\""));
        let back: DecayRateSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.file_stem(), "decay_U_1_inf");
        assert_eq!(spec(2.0, Component::H, Part::Res).file_stem(), "decay_H_1_2");
    }

    #[test]
    fn grid_norm_examples() {
        let x: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let f = PhysicalField {
            t: 1.0,
            component: "c".into(),
            x: x.clone(),
            values: vec![3.0; 100],
            imag_residue: 0.0,
        };
        let (_, n) = lq_time_series(std::slice::from_ref(&f), 2.0).unwrap();
        assert!((n[0] - 3.0 * 10f64.sqrt()).abs() < 1e-12);
        let mut g = f.clone();
        g.values[17] = -7.5;
        assert_eq!(lq_time_series(&[g], f64::INFINITY).unwrap().1[0], 7.5);
        let x: Vec<f64> = (-4000..=4000).map(|k| k as f64 * 2e-3).collect();
        let v: Vec<f64> = x.iter().map(|x| (-x * x).exp()).collect();
        let n = grid_lq(&x, &v, 2.0).unwrap();
        assert!((n / (PI / 2.0).powf(0.25) - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn fit_examples() {
        let w = FitWindow::default();
        let t = w.samples(25);
        let v: Vec<f64> = t.iter().map(|t| 5.0 * t.powf(-0.4)).collect();
        assert!((fit_rate(&t, &v, w).unwrap().exponent - 0.4).abs() < 1e-6);
        let w1 = FitWindow { t_min: 1.0, t_max: 20.0 };
        let t1 = w1.samples(25);
        let e: Vec<f64> = t1.iter().map(|t| (-t).exp()).collect();
        assert!(matches!(fit_rate(&t1, &e, w1), Err(Error::NonPolynomialDecay { .. })));
        let g = fit_exponential(&t1, &e, w1).unwrap();
        assert!((g.gamma - 1.0).abs() < 1e-12);
        let p: Vec<f64> = t.iter().map(|t| t.powf(-0.4) * (1.0 + 0.05 * t.ln().sin())).collect();
        assert!((fit_rate(&t, &p, w).unwrap().exponent - 0.4).abs() <= 0.05);
    }

    #[test]
    fn fit_needs_points_in_window() {
        assert!(fit_rate(&[1.0, 2.0], &[1.0, 0.5], FitWindow::default()).is_err());
        let t = [100.0, 200.0, 400.0];
        assert!(fit_rate(&t, &[1.0, 0.0, 0.5], FitWindow::default()).is_err());
    }

    #[test]
    fn report_verdicts() {
        let w = FitWindow::default();
        let t = w.samples(25);
        let v: Vec<f64> = t.iter().map(|t| t.powf(-0.45)).collect();
        let r = decay_report(&spec(2.0, Component::H, Part::Res), &t, &v, w, 0.08).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = decay_report(&spec(f64::INFINITY, Component::H, Part::Res), &t, &v, w, 0.08).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w1 = FitWindow { t_min: 1.0, t_max: 20.0 };
        let t1 = w1.samples(20);
        let e: Vec<f64> = t1.iter().map(|t| 2.0 * (-0.3 * t).exp()).collect();
        let r = decay_report(&spec(2.0, Component::H, Part::High), &t1, &e, w1, 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.fitted_gamma.unwrap() - 0.3).abs() < 1e-12);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 21);
    }

    #[test]
    fn sphere_measure() {
        assert!((gamma_fn(1.5) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((gamma_fn(3.0) - 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn fit_is_scale_invariant(c in 1e-6f64..1e6, r in 0.05f64..2.0) {
            let w = FitWindow::default();
            let t = w.samples(25);
            let v: Vec<f64> = t.iter().map(|t| t.powf(-r) * (1.0 + 0.1 * (t.ln()).cos())).collect();
            let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
            let a = fit_rate(&t, &v, w).unwrap().exponent;
            let b = fit_rate(&t, &cv, w).unwrap().exponent;
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn prediction_monotone_in_q(p in 1.0f64..1.99, q1 in 2.0f64..50.0, dq in 0.0f64..50.0, u in any::<bool>()) {
            let c = if u { Component::U } else { Component::H };
            for part in [Part::Res, Part::Tilde, Part::Combined] {
                let a = DecayRateSpec::new(2, p, q1, c, part).unwrap();
                let b = DecayRateSpec::new(2, p, q1 + dq, c, part).unwrap();
                let inf = DecayRateSpec::new(2, p, f64::INFINITY, c, part).unwrap();
                let ra = predicted_rate(&a).unwrap().exponent().unwrap();
                let rb = predicted_rate(&b).unwrap().exponent().unwrap();
                let ri = predicted_rate(&inf).unwrap().exponent().unwrap();
                prop_assert!(rb >= ra - 1e-15 && ri >= rb - 1e-15);
            }
        }
    }
}
