//! The two slow zeros `λ±(A)` of `𝓛_A`, their certification by Rouché and the
//! argument principle, frequency-threshold calibration and stability
//! classification.

use crate::contours::{
    argument_principle_count, build_gamma0, build_high_paths, build_low_paths, gamma0_height_at, rectangle_region,
    sample_boundary, ContourPath, Region, Segment,
};
use crate::error::{Error, Result};
use crate::symbols::{eval_core_at, eval_core_with_derivatives, zeta, DerivedConstants, FluidParams};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const BOUNDARY_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub a: f64,
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub residual: f64,
    pub deriv_plus: C64,
    pub deriv_minus: C64,
}

fn script_l(params: &FluidParams, consts: &DerivedConstants, a: f64, lam: C64) -> Result<C64> {
    Ok(eval_core_at(params, consts, a, lam)?.script_l)
}

fn muller<F: FnMut(C64) -> Result<C64>>(mut f: F, seed: C64, h: f64, a: f64) -> Result<C64> {
    let (mut x0, mut x1, mut x2) = (seed - h, seed + h, seed);
    let (mut f0, mut f1, mut f2) = (f(x0)?, f(x1)?, f(x2)?);
    for _ in 0..100 {
        let q = (x2 - x1) / (x1 - x0);
        let aa = q * f2 - q * (q + 1.0) * f1 + q * q * f0;
        let bb = (q * 2.0 + 1.0) * f2 - (q + 1.0) * (q + 1.0) * f1 + q * q * f0;
        let cc = (q + 1.0) * f2;
        let disc = (bb * bb - aa * cc * 4.0).sqrt();
        let den = if (bb + disc).norm() > (bb - disc).norm() { bb + disc } else { bb - disc };
        if den.norm() == 0.0 {
            break;
        }
        let x3 = x2 - (x2 - x1) * cc * 2.0 / den;
        let f3 = f(x3)?;
        if (x3 - x2).norm() <= 1e-15 * x3.norm().max(1e-300) || f3.norm() == 0.0 {
            return Ok(x3);
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        x2 = x3;
        f2 = f3;
    }
    Err(Error::NoConvergence { a, iterate: x2 })
}

/// Damped Newton on `𝓛_A` from `seed`, falling back to Muller's method.
/// Returns the root and `𝓛_A'` there.
pub fn polish_root(params: &FluidParams, consts: &DerivedConstants, a: f64, seed: C64) -> Result<(C64, C64)> {
    let mut lam = seed;

    let mut converged = false;
    for _ in 0..50 {
        let (s, d) = eval_core_with_derivatives(params, consts, a, lam)?;
        let val = s.script_l;
        if val.norm() == 0.0 {
            converged = true;
            break;
        }
        let step = val / d.dscript_l;
        let mut damp = 1.0;
        let mut next = lam - step;
        let mut next_val = script_l(params, consts, a, next);
        while damp > 1e-6 && next_val.as_ref().map(|v| v.norm() >= val.norm()).unwrap_or(true) {
            damp *= 0.5;
            next = lam - step * damp;
            next_val = script_l(params, consts, a, next);
        }
        if damp <= 1e-6 {
            // Stalled: either converged to roundoff or needs the fallback.
            converged = step.norm() <= 1e-13 * lam.norm().max(1e-300);
            break;
        }
        lam = next;
        next_val?;
        if (step * damp).norm() <= 1e-15 * lam.norm().max(1e-300) {
            converged = true;
            break;
        }
    }
    if !converged {
        let h = 1e-3 * lam.norm().max(1e-12);
        lam = muller(|z| script_l(params, consts, a, z), lam, h, a)?;
    }
    let (s, d) = eval_core_with_derivatives(params, consts, a, lam)?;
    if !(s.script_l.norm() <= 1e-12 * lam.norm().powi(2).max(1.0)) {
        return Err(Error::NoConvergence { a, iterate: lam });
    }
    Ok((lam, d.dscript_l))
}

/// Slow roots seeded at `ζ±`, checked to lie inside their residue disks.
pub fn find_roots(params: &FluidParams, consts: &DerivedConstants, a: f64) -> Result<RootPair> {
    if !(a > 0.0) {
        return Err(Error::InvalidParams(format!("roots need A > 0, got {a}")));
    }
    let (zp, zm) = zeta(consts, a);
    let (lp, dp) = polish_root(params, consts, a, zp)?;
    let (lm, dm) = polish_root(params, consts, a, zm)?;
    let r = a.powf(1.5);
    for (root, z) in [(lp, zp), (lm, zm)] {
        if (root - z).norm() >= r {
            return Err(Error::RootEscapedRegion { a, root });
        }
    }
    let residual = script_l(params, consts, a, lp)?
        .norm()
        .max(script_l(params, consts, a, lm)?.norm());
    Ok(RootPair {
        a,
        lambda_plus: lp,
        lambda_minus: lm,
        residual,
        deriv_plus: dp,
        deriv_minus: dm,
    })
}

/// Residue of `F/L` at a simple zero of `L`, using `∂_λ L` directly.
pub fn residue_weight(params: &FluidParams, consts: &DerivedConstants, a: f64, root: C64) -> Result<C64> {
    let (s, d) = eval_core_with_derivatives(params, consts, a, root)?;
    Ok(s.f / d.dl)
}

/// Same residue computed through `L = (ρ₊+ρ₋)(D₊+D₋)𝓛_A`, valid at zeros of `𝓛_A`.
pub fn residue_weight_factorized(params: &FluidParams, consts: &DerivedConstants, a: f64, root: C64) -> Result<C64> {
    let (s, d) = eval_core_with_derivatives(params, consts, a, root)?;
    Ok(s.f / ((s.d_plus + s.d_minus) * (params.rho_plus + params.rho_minus) * d.dscript_l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoucheFamily {
    KBoundary,
    ResCircles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoucheReport {
    pub a: f64,
    pub family: RoucheFamily,
    /// min over samples of `|𝓕_A| − |𝓖_A|`.
    pub margin: f64,
    /// min over samples of `(|𝓕_A| − |𝓖_A|)/|𝓕_A|`.
    pub relative_margin: f64,
    pub samples: usize,
    pub pass: bool,
}

fn rouche_on(params: &FluidParams, consts: &DerivedConstants, a: f64, path: &ContourPath, samples: usize) -> (f64, f64) {
    let mut margin = f64::INFINITY;
    let mut rel = f64::INFINITY;
    for (k, s) in sample_boundary(path, samples) {
        let lam = path.segments[k].point(s);
        match eval_core_at(params, consts, a, lam) {
            Ok(sym) => {
                let (f, g) = (sym.script_f.norm(), sym.script_g.norm());
                margin = margin.min(f - g);
                rel = rel.min((f - g) / f);
            }
            Err(_) => {
                margin = f64::NEG_INFINITY;
                rel = f64::NEG_INFINITY;
            }
        }
    }
    (margin, rel)
}

/// Sampled Rouché margin on the boundary of `K` or on both residue circles;
/// repeated at twice the sampling density and the worse value reported.
pub fn verify_rouche(params: &FluidParams, consts: &DerivedConstants, a: f64, family: RoucheFamily) -> RoucheReport {
    let paths: Vec<ContourPath> = match build_low_paths(consts, a) {
        Ok(lp) => match family {
            RoucheFamily::KBoundary => vec![lp.k.boundary],
            RoucheFamily::ResCircles => lp.res.to_vec(),
        },
        Err(_) => {
            return RoucheReport {
                a,
                family,
                margin: f64::NEG_INFINITY,
                relative_margin: f64::NEG_INFINITY,
                samples: 0,
                pass: false,
            }
        }
    };
    let mut margin = f64::INFINITY;
    let mut rel = f64::INFINITY;
    for p in &paths {
        for n in [BOUNDARY_SAMPLES, 2 * BOUNDARY_SAMPLES] {
            let (m, r) = rouche_on(params, consts, a, p, n);
            margin = margin.min(m);
            rel = rel.min(r);
        }
    }
    RoucheReport {
        a,
        family,
        margin,
        relative_margin: rel,
        samples: 2 * BOUNDARY_SAMPLES,
        pass: margin > 0.0,
    }
}

/// Closed region between the right-most contour and the low-band sweep
/// `Γ₄ ∪ Γ₁`; it must contain exactly the two slow roots for the Cauchy
/// decomposition to hold.
pub fn decomposition_region(consts: &DerivedConstants, a: f64) -> Result<Region> {
    let lp = build_low_paths(consts, a)?;
    let anchor = C64::new(consts.gamma0_anchor(), 0.0);
    let ang = PI - consts.theta1;
    let s3 = (lp.z3[0] - anchor).norm();
    let mut segs = vec![
        Segment::Ray {
            start: anchor,
            angle: -ang,
            s_max: Some(s3),
            inward: true,
        },
        Segment::Ray {
            start: anchor,
            angle: ang,
            s_max: Some(s3),
            inward: false,
        },
    ];
    let inner = ContourPath::new(
        "",
        vec![
            lp.gamma4[1].segments[0].clone(),
            lp.gamma1[1].segments[0].clone(),
            lp.gamma1[0].segments[0].clone(),
            lp.gamma4[0].segments[0].clone(),
        ],
    );
    segs.extend(inner.reversed().segments);
    Ok(Region {
        name: "decomposition".into(),
        boundary: ContourPath::new("decomposition", segs),
    })
}

/// Closed region between the right-most contour and the vertical segment
/// `Re λ = -a0`; it must be zero-free for the mid/high band paths.
pub fn mid_region(consts: &DerivedConstants, a0: f64) -> Result<Region> {
    let y_top = gamma0_height_at(consts, a0);
    let hp = build_high_paths(consts, a0, y_top)?;
    let anchor = C64::new(consts.gamma0_anchor(), 0.0);
    let ang = PI - consts.theta1;
    let s5 = (C64::new(-a0, y_top) - anchor).norm();
    let mut segs = vec![
        Segment::Ray {
            start: anchor,
            angle: -ang,
            s_max: Some(s5),
            inward: true,
        },
        Segment::Ray {
            start: anchor,
            angle: ang,
            s_max: Some(s5),
            inward: false,
        },
    ];
    segs.extend(hp.gamma6.reversed().segments);
    Ok(Region {
        name: "mid".into(),
        boundary: ContourPath::new("mid", segs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub a: f64,
    pub check: String,
    pub value: f64,
    pub pass: bool,
}

/// Artifact-defined stand-ins for the existence constants of the low, middle
/// and high frequency bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCalibration {
    pub a0: f64,
    pub a_inf: f64,
    pub mid_abscissa: f64,
    pub y_top: f64,
    pub lambda1: f64,
    pub certificates: Vec<Certificate>,
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Every check that makes `A` a certified low-band frequency.
pub fn certify_low(params: &FluidParams, consts: &DerivedConstants, a: f64) -> Vec<Certificate> {
    let mut out = Vec::new();
    let mut push = |check: &str, value: f64, pass: bool| {
        out.push(Certificate {
            a,
            check: check.into(),
            value,
            pass,
        })
    };
    let rk = verify_rouche(params, consts, a, RoucheFamily::KBoundary);
    push("rouche_K", rk.relative_margin, rk.pass);
    let rr = verify_rouche(params, consts, a, RoucheFamily::ResCircles);
    push("rouche_res", rr.relative_margin, rr.pass);
    let f = |l: C64| eval_core_at(params, consts, a, l).map(|s| s.script_l).unwrap_or(C64::new(0.0, 0.0));
    match build_low_paths(consts, a) {
        Ok(lp) => {
            let count = |r: &Region| argument_principle_count(r, f, BOUNDARY_SAMPLES).map(|n| n as f64).unwrap_or(f64::NAN);
            let n = count(&lp.k);
            push("zeros_K", n, n == 2.0);
            let n = count(&lp.k_pm[0]);
            push("zeros_K+", n, n == 1.0);
            let n = count(&lp.k_pm[1]);
            push("zeros_K-", n, n == 1.0);
        }
        Err(_) => push("geometry", f64::NAN, false),
    }
    match decomposition_region(consts, a) {
        Ok(r) => {
            let n = argument_principle_count(&r, f, BOUNDARY_SAMPLES).map(|n| n as f64).unwrap_or(f64::NAN);
            push("zeros_decomposition", n, n == 2.0);
        }
        Err(_) => push("zeros_decomposition", f64::NAN, false),
    }
    match find_roots(params, consts, a) {
        Ok(rp) => push("root_in_disk", rp.residual, true),
        Err(_) => push("root_in_disk", f64::NAN, false),
    }
    out
}

const LOW_SAMPLE_FLOOR: f64 = 1e-4;

/// Largest dyadic level `A0 ≤ 1/2` such that every sampled `A ≤ 2·A0` passes
/// the low-band certificate. The factor two covers the support of the
/// low-band cutoff.
pub fn calibrate_a0(params: &FluidParams, consts: &DerivedConstants) -> Result<(f64, Vec<Certificate>)> {
    for k in 1..=20 {
        let level = 0.5f64.powi(k);
        let top = 2.0 * level;
        let samples = log_spaced(LOW_SAMPLE_FLOOR.min(top / 2.0), top, 16);
        let mut certs = Vec::new();
        let mut ok = true;
        for a in samples.iter().rev() {
            let c = certify_low(params, consts, *a);
            ok &= c.iter().all(|c| c.pass);
            certs.extend(c);
            if !ok {
                break;
            }
        }
        if ok {
            return Ok((level, certs));
        }
    }
    Err(Error::CalibrationFailure("no dyadic low-frequency level passes".into()))
}

fn high_ok(params: &FluidParams, consts: &DerivedConstants, a: f64) -> (bool, f64) {
    let b = gamma0_height_at(consts, 1.0);
    let mut worst = f64::INFINITY;
    for ix in 0..=20 {
        let x = -(ix as f64) / 20.0;
        for iy in 0..=40 {
            let y = -b + 2.0 * b * iy as f64 / 40.0;
            match eval_core_at(params, consts, a, C64::new(x, y)) {
                Ok(s) if s.b_plus.re > 0.0 && s.b_minus.re > 0.0 => {
                    worst = worst.min(s.l.norm() / (params.sigma * a.powi(4)));
                }
                _ => return (false, f64::NAN),
            }
        }
    }
    (worst >= 0.1, worst)
}

/// `(A_inf, a0, y_top)` with certificates: the high threshold from a lower
/// bound on `|L|` over `Λ(1, Im z₄)`, the mid abscissa from a zero-free region
/// between the vertical segment and the right-most contour.
pub fn calibrate_high(
    params: &FluidParams,
    consts: &DerivedConstants,
    a0: f64,
    a_max: f64,
) -> Result<(f64, f64, f64, Vec<Certificate>)> {
    let mut certs = Vec::new();
    let mut a_inf = None;
    for k in 1..=12 {
        let level = 2f64.powi(k);
        let samples: Vec<f64> = (0..5).map(|j| level * 2f64.powi(j)).collect();
        let mut ok = true;
        let mut local = Vec::new();
        for &a in &samples {
            let (pass, worst) = high_ok(params, consts, a);
            local.push(Certificate {
                a,
                check: "high_L_lower_bound".into(),
                value: worst,
                pass,
            });
            ok &= pass;
        }
        if ok {
            certs.extend(local);
            a_inf = Some(level);
            break;
        }
    }
    let a_inf = a_inf.ok_or_else(|| Error::CalibrationFailure("no dyadic high-frequency level passes".into()))?;

    // The vertical segment must stay right of every branch point in the band.
    let cut_limit = consts.z0 * a0 * a0;
    let top = (3.0 * a_inf).max(a_max);
    let band = log_spaced(a0, top, 16);
    for k in 1..=30 {
        let a0_try = 0.5f64.powi(k);
        if a0_try >= cut_limit {
            continue;
        }
        let region = mid_region(consts, a0_try)?;
        let y_top = gamma0_height_at(consts, a0_try);
        let mut ok = true;
        let mut local = Vec::new();
        for &a in &band {
            let f = |l: C64| eval_core_at(params, consts, a, l).map(|s| s.script_l).unwrap_or(C64::new(0.0, 0.0));
            let n = argument_principle_count(&region, f, BOUNDARY_SAMPLES)
                .map(|n| n as f64)
                .unwrap_or(f64::NAN);
            local.push(Certificate {
                a,
                check: "zeros_mid_region".into(),
                value: n,
                pass: n == 0.0,
            });
            ok &= n == 0.0;
            // |L| floor along the vertical segment.
            let mut floor = f64::INFINITY;
            for iy in 0..=64 {
                let y = -y_top + 2.0 * y_top * iy as f64 / 64.0;
                if let Ok(s) = eval_core_at(params, consts, a, C64::new(-a0_try, y)) {
                    floor = floor.min(s.l.norm());
                } else {
                    floor = 0.0;
                }
            }
            let pass = floor > 1e-10;
            local.push(Certificate {
                a,
                check: "mid_L_floor".into(),
                value: floor,
                pass,
            });
            ok &= pass;
            if !ok {
                break;
            }
        }
        if ok {
            certs.extend(local);
            return Ok((a_inf, a0_try, y_top, certs));
        }
    }
    Err(Error::CalibrationFailure("no mid-band abscissa passes".into()))
}

/// Full calibration. `a_max` is the largest frequency the run will touch.
pub fn calibrate(params: &FluidParams, consts: &DerivedConstants, a_max: f64) -> Result<FrequencyCalibration> {
    let (a0, mut certs) = calibrate_a0(params, consts)?;
    let (a_inf, mid, y_top, high) = calibrate_high(params, consts, a0, a_max)?;
    certs.extend(high);
    Ok(FrequencyCalibration {
        a0,
        a_inf,
        mid_abscissa: mid,
        y_top,
        lambda1: consts.lambda1,
        certificates: certs,
    })
}

impl FrequencyCalibration {
    /// Cheap re-check of a loaded calibration against the current fluids.
    pub fn revalidate(&self, params: &FluidParams, consts: &DerivedConstants) -> Result<()> {
        if (self.lambda1 - consts.lambda1).abs() > 0.0 {
            return Err(Error::CalibrationFailure("calibration was made for another lambda1".into()));
        }
        if !(self.a0 < 1.0 && self.a_inf >= 2.0 && self.mid_abscissa > 0.0 && self.mid_abscissa < 1.0) {
            return Err(Error::CalibrationFailure("thresholds out of range".into()));
        }
        for a in [self.a0, self.a0 / 10.0] {
            if !certify_low(params, consts, a).iter().all(|c| c.pass) {
                return Err(Error::CalibrationFailure(format!("low-band certificate fails at A={a}")));
            }
        }
        let region = mid_region(consts, self.mid_abscissa)?;
        for a in [self.a0, self.a_inf] {
            let f = |l: C64| eval_core_at(params, consts, a, l).map(|s| s.script_l).unwrap_or(C64::new(0.0, 0.0));
            if argument_principle_count(&region, f, BOUNDARY_SAMPLES)? != 0 {
                return Err(Error::CalibrationFailure(format!("mid region not zero-free at A={a}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable { a: f64, root: C64, residual: f64 },
}

fn rhp_count(params: &FluidParams, consts: &DerivedConstants, a: f64, r: f64) -> Result<i64> {
    let f = |l: C64| eval_core_at(params, consts, a, l).map(|s| s.script_l).unwrap_or(C64::new(0.0, 0.0));
    let mut x_min = 0.0;
    loop {
        match argument_principle_count(&rectangle_region("rhp", x_min, r, r), f, BOUNDARY_SAMPLES) {
            Err(Error::BoundaryZero { .. }) if x_min < 1e-6 => x_min = if x_min == 0.0 { 1e-9 } else { x_min * 10.0 },
            other => return other,
        }
    }
}

/// Count zeros of `𝓛_A` in a right half-plane box for each sampled `A`; the
/// first positive count is polished into a witness root.
pub fn classify_stability(params: &FluidParams, consts: &DerivedConstants, a_samples: &[f64]) -> Result<Stability> {
    for &a in a_samples {
        let k = (consts.alpha.abs() * a + consts.tilde_sigma * a.powi(3)).sqrt();
        let r = 4.0 * (1.0 + k);
        let n = rhp_count(params, consts, a, r)?;
        if n >= 1 {
            // Growth root: scan the positive axis for a sign change of the real symbol.
            let g = |x: f64| eval_core_at(params, consts, a, C64::new(x, 0.0)).map(|s| s.script_l.re);
            let mut lo = 1e-12;
            let mut seed = None;
            let steps = 4000;
            let mut g_lo = g(lo)?;
            for i in 1..=steps {
                let hi = r * i as f64 / steps as f64;
                let g_hi = g(hi)?;
                if g_lo.signum() != g_hi.signum() {
                    let (mut x0, mut x1) = (lo, hi);
                    for _ in 0..80 {
                        let m = 0.5 * (x0 + x1);
                        if g(m)?.signum() == g_lo.signum() {
                            x0 = m;
                        } else {
                            x1 = m;
                        }
                    }
                    seed = Some(C64::new(0.5 * (x0 + x1), 0.0));
                    break;
                }
                lo = hi;
                g_lo = g_hi;
            }
            let seed = seed.unwrap_or(C64::new(0.5 * r, 0.5 * r));
            let (root, _) = polish_root(params, consts, a, seed)?;
            let residual = script_l(params, consts, a, root)?.norm();
            return Ok(Stability::Unstable { a, root, residual });
        }
    }
    Ok(Stability::Stable)
}

/// Unused by evolution; kept so the right-most contour can be checked
/// zero-free to its right in verification.
pub fn gamma0_path(consts: &DerivedConstants) -> ContourPath {
    build_gamma0(consts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::derive_constants;

    fn setup() -> (FluidParams, DerivedConstants) {
        let p = FluidParams::default();
        let c = derive_constants(&p, None).unwrap();
        (p, c)
    }

    #[test]
    fn roots_are_conjugate_and_accurate() {
        let (p, c) = setup();
        for a in [1e-4, 1e-3, 1e-2, 0.05] {
            let r = find_roots(&p, &c, a).unwrap();
            assert!((r.lambda_minus - r.lambda_plus.conj()).norm() <= 1e-10);
            assert!(r.residual <= 1e-12 * r.lambda_plus.norm().powi(2).max(1.0));
            assert!(r.lambda_plus.re < 0.0);
        }
    }

    #[test]
    fn roots_approach_two_term_approximation() {
        let (p, c) = setup();
        let a_list = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
        let pts: Vec<(f64, f64)> = a_list
            .iter()
            .map(|&a| {
                let r = find_roots(&p, &c, a).unwrap();
                (a.ln(), (r.lambda_plus - zeta(&c, a).0).norm().ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(slope >= 1.45, "slope {slope}");
    }

    #[test]
    fn residue_weight_two_routes_agree() {
        let (p, c) = setup();
        for a in [1e-3, 0.02, 0.06] {
            let r = find_roots(&p, &c, a).unwrap();
            let w1 = residue_weight(&p, &c, a, r.lambda_plus).unwrap();
            let w2 = residue_weight_factorized(&p, &c, a, r.lambda_plus).unwrap();
            assert!((w1 - w2).norm() <= 1e-10 * w1.norm());
        }
    }

    #[test]
    fn derivative_scales_like_sqrt_a() {
        let (p, c) = setup();
        let ratios: Vec<f64> = log_spaced(1e-4, 0.06, 8)
            .into_iter()
            .map(|a| find_roots(&p, &c, a).unwrap().deriv_plus.norm() / a.sqrt())
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(lo > 0.5, "{ratios:?}");
    }

    #[test]
    fn root_continuity_along_sweep() {
        let (p, c) = setup();
        let mut prev: Option<C64> = None;
        for a in log_spaced(1e-4, 0.06, 12) {
            let r = find_roots(&p, &c, a).unwrap();
            if let Some(q) = prev {
                let (lam, _) = polish_root(&p, &c, a, q).unwrap();
                assert!((lam - r.lambda_plus).norm() <= 1e-10 * r.lambda_plus.norm());
            }
            prev = Some(r.lambda_plus);
        }
    }

    #[test]
    fn rouche_reports() {
        let (p, c) = setup();
        let a = 0.005;
        assert!(verify_rouche(&p, &c, a, RoucheFamily::KBoundary).pass);
        assert!(verify_rouche(&p, &c, a, RoucheFamily::ResCircles).pass);
        // Out of regime: still a report.
        let r = verify_rouche(&p, &c, 10.0, RoucheFamily::KBoundary);
        assert!(!r.pass || r.margin.is_finite());
    }

    #[test]
    fn decomposition_region_holds_two_roots() {
        let (p, c) = setup();
        for a in [1e-3, 0.05] {
            let r = decomposition_region(&c, a).unwrap();
            assert!(r.boundary.continuity_defect(true) < 1e-12);
            let f = |l: C64| eval_core_at(&p, &c, a, l).unwrap().script_l;
            assert_eq!(argument_principle_count(&r, f, 512).unwrap(), 2);
        }
    }

    #[test]
    fn stable_and_inverted_regimes() {
        let (p, c) = setup();
        let samples = log_spaced(1e-3, 4.0, 6);
        assert_eq!(classify_stability(&p, &c, &samples).unwrap(), Stability::Stable);
        let inv = FluidParams::new(2.0, 1.0, 1.0, 1.0, 1.0, 3.0).unwrap();
        let ci = derive_constants(&inv, None).unwrap();
        match classify_stability(&inv, &ci, &[0.01]).unwrap() {
            Stability::Unstable { root, residual, .. } => {
                assert!(root.re > 0.0 && root.im.abs() < 1e-12);
                assert!(residual <= 1e-12);
                let scale = (ci.alpha.abs() * 0.01).sqrt();
                assert!(root.re > 0.1 * scale && root.re < 10.0 * scale);
            }
            s => panic!("expected instability, got {s:?}"),
        }
    }

    #[test]
    fn calibration_thresholds() {
        let (p, c) = setup();
        let cal = calibrate(&p, &c, 32.0).unwrap();
        eprintln!("A0={} Ainf={} a0={} ytop={}", cal.a0, cal.a_inf, cal.mid_abscissa, cal.y_top);
        assert!(cal.a0 < 1.0 && cal.a_inf >= 2.0);
        assert!(cal.mid_abscissa > 0.0 && cal.mid_abscissa < 1.0);
        assert!(cal.certificates.iter().all(|c| c.pass));
        for a in [cal.a0, cal.a0 / 10.0] {
            assert!(verify_rouche(&p, &c, a, RoucheFamily::KBoundary).pass);
            assert!(verify_rouche(&p, &c, a, RoucheFamily::ResCircles).pass);
        }
        let lp = build_low_paths(&c, cal.a0 / 2.0).unwrap();
        let f = |l: C64| eval_core_at(&p, &c, cal.a0 / 2.0, l).unwrap().script_l;
        assert_eq!(argument_principle_count(&lp.k, f, 512).unwrap(), 2);
        cal.revalidate(&p, &c).unwrap();
    }
}
