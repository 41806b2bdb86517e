//! Independent reference computations and the verification suites built on
//! them. Each suite draws from a seeded generator so reruns are identical.

use crate::contours::{build_gamma0, build_low_paths, integrate_exp, ContourPath};
use crate::error::{Error, Result};
use crate::kernels::{
    eta_hat_component, evolve_spectral, residue_mode, stress_jump_residual, BandMask, DrivingData, Probe,
    SpectralEvaluator, SpectralGrid, SpectralOptions,
};
use crate::layers::{
    axial_kernel_integrals, idot, interface_residuals, solve_interface_with, InterfaceCoefficients, InterfaceRhs,
    SideCoefficients,
};
use crate::quadrature::{adaptive, gl, oscillatory_tail};
use crate::roots::{calibrate, certify_low, classify_stability, find_roots, log_spaced, FrequencyCalibration, Stability};
use crate::symbols::{derive_constants, eval_core, eval_core_at, zeta, CoreSymbols, FluidParams, Side, SymbolPoint};
use crate::transform::{forward_d, forward_d_fft, inverse_1d, inverse_radial, parseval_pair, DataPreset, FrequencyGrid};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Assemble the full interface system for the `4N + 2` unknowns
/// `(α₊, β₊, γ₊, α₋, β₋, γ₋)` row by row from the transmission conditions
/// and solve it by dense LU.
pub fn dense_interface_solve(
    p: &FluidParams,
    s: &CoreSymbols,
    xi: &[f64],
    g: &[C64],
    h: &[C64],
) -> Result<InterfaceCoefficients> {
    let n = xi.len() + 1;
    let m = 4 * n + 2;
    let off = |side: Side| if side == Side::Plus { 0 } else { 2 * n + 1 };
    let ia = |side: Side, j: usize| off(side) + j;
    let ib = |side: Side, j: usize| off(side) + n + j;
    let ig = |side: Side| off(side) + 2 * n;
    let mut mat = DMatrix::<C64>::zeros(m, m);
    let mut rhs = DVector::<C64>::zeros(m);
    let a = s.a;
    let i = C64::i();
    let ixi = |j: usize| i * xi[j];
    let mut r = 0;
    for side in Side::BOTH {
        let sg = side.sign();
        let b = s.b(side);
        let mu = p.mu(side);
        let ab = c(a * a, 0.0) - b * b;
        for j in 0..n - 1 {
            mat[(r, ia(side, j))] = -ab * mu;
            mat[(r, ig(side))] = ixi(j);
            r += 1;
        }
        mat[(r, ia(side, n - 1))] = -ab * mu;
        mat[(r, ig(side))] = c(-sg * a, 0.0);
        r += 1;
        for j in 0..n - 1 {
            mat[(r, ia(side, j))] = -ixi(j);
            mat[(r, ib(side, j))] = ixi(j);
        }
        mat[(r, ia(side, n - 1))] = b * sg;
        mat[(r, ib(side, n - 1))] = -b * sg;
        r += 1;
    }
    let (mp, mm) = (p.mu_plus, p.mu_minus);
    let (bp, bm) = (s.b_plus, s.b_minus);
    for j in 0..n - 1 {
        mat[(r, ia(Side::Plus, j))] = (bp - a) * mp;
        mat[(r, ib(Side::Plus, j))] = -bp * mp;
        mat[(r, ib(Side::Plus, n - 1))] = ixi(j) * mp;
        mat[(r, ia(Side::Minus, j))] = -(a - bm) * mm;
        mat[(r, ib(Side::Minus, j))] = -bm * mm;
        mat[(r, ib(Side::Minus, n - 1))] = -ixi(j) * mm;
        rhs[r] = g[j];
        r += 1;
    }
    mat[(r, ia(Side::Plus, n - 1))] = (bp - a) * (2.0 * mp);
    mat[(r, ib(Side::Plus, n - 1))] = -bp * (2.0 * mp);
    mat[(r, ig(Side::Plus))] = c(-1.0, 0.0);
    mat[(r, ia(Side::Minus, n - 1))] = -(a - bm) * (2.0 * mm);
    mat[(r, ib(Side::Minus, n - 1))] = -bm * (2.0 * mm);
    mat[(r, ig(Side::Minus))] = c(1.0, 0.0);
    rhs[r] = g[n - 1];
    r += 1;
    for j in 0..n {
        mat[(r, ib(Side::Plus, j))] = c(1.0, 0.0);
        mat[(r, ib(Side::Minus, j))] = c(-1.0, 0.0);
        rhs[r] = h[j];
        r += 1;
    }
    debug_assert_eq!(r, m);
    let x = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::QuadratureFailure("dense interface system is singular".into()))?;
    let side = |sd: Side| {
        let alpha: Vec<C64> = (0..n).map(|j| x[ia(sd, j)]).collect();
        let beta: Vec<C64> = (0..n).map(|j| x[ib(sd, j)]).collect();
        SideCoefficients {
            alpha_prime_dot: idot(xi, &alpha[..n - 1]),
            beta_prime_dot: idot(xi, &beta[..n - 1]),
            alpha,
            beta,
            gamma: x[ig(sd)],
        }
    };
    Ok(InterfaceCoefficients {
        plus: side(Side::Plus),
        minus: side(Side::Minus),
    })
}

/// `(1/2π)∫ e^{i a x} r(x) dx` by folding onto `x > 0`, integrating the
/// non-oscillatory head adaptively and summing half-period panels with
/// Euler acceleration.
pub fn fourier_oracle<R: Fn(f64) -> C64>(r: R, a: f64, scale: f64) -> Result<C64> {
    let folded = |x: f64| c(0.0, a * x).exp() * r(x) + c(0.0, -a * x).exp() * r(-x);
    let half = PI / a.abs();
    let head_end = half * ((20.0 * scale / half).ceil().max(4.0));
    let head = adaptive(0.0, head_end, folded, 1e-13)?;
    let rule = gl(32);
    let (tail, _) = oscillatory_tail(|lo, hi| rule.integrate_c(lo, hi, folded), |k| head_end + k as f64 * half, 60);
    Ok((head + tail) / (2.0 * PI))
}

/// The five axial kernels of one side by direct Fourier quadrature of their
/// rational symbols in `ξ_N`.
pub fn oracle_axial_kernels(p: &FluidParams, s: &CoreSymbols, side: Side, a: f64) -> Result<[C64; 5]> {
    let (rho, mu) = (p.rho(side), p.mu(side));
    let lam = s.lambda;
    let a2 = s.a * s.a;
    let pp = move |x: f64| lam * rho + mu * (a2 + x * x);
    let q = move |x: f64| a2 + x * x;
    let scale = s.b(side).norm().max(s.a);
    Ok([
        fourier_oracle(|x| 1.0 / pp(x), a, scale)?,
        fourier_oracle(|x| c(0.0, x) / pp(x), a, scale)?,
        fourier_oracle(|x| 1.0 / (pp(x) * q(x)), a, scale)?,
        fourier_oracle(|x| c(0.0, x) / (pp(x) * q(x)), a, scale)?,
        fourier_oracle(|x| -x * x / (pp(x) * q(x)), a, scale)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the suite's metric.
    pub worst: f64,
    pub threshold: f64,
    pub samples: usize,
    pub detail: String,
}

impl SuiteResult {
    fn below(name: &str, worst: f64, threshold: f64, samples: usize, detail: String) -> Self {
        SuiteResult {
            name: name.into(),
            passed: worst <= threshold,
            worst,
            threshold,
            samples,
            detail,
        }
    }

    fn failed(name: &str, e: &Error) -> Self {
        SuiteResult {
            name: name.into(),
            passed: false,
            worst: f64::NAN,
            threshold: f64::NAN,
            samples: 0,
            detail: format!("{}: {e}", e.kind()),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * r.gen::<f64>()).exp()
}

/// Fluids with the heavier one below.
fn random_stable_params(r: &mut ChaCha8Rng) -> FluidParams {
    let rho_plus = r.gen_range(0.3..3.0);
    FluidParams {
        rho_plus,
        rho_minus: rho_plus * r.gen_range(1.1..4.0),
        mu_plus: log_uniform(r, 0.1, 10.0),
        mu_minus: log_uniform(r, 0.1, 10.0),
        sigma: log_uniform(r, 0.05, 5.0),
        gravity: r.gen_range(0.5..10.0),
    }
}

/// `λ` in the sector `|arg λ| ≤ 0.9π` with log-uniform modulus.
fn random_lambda(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> C64 {
    C64::from_polar(log_uniform(r, lo, hi), r.gen_range(-0.9 * PI..0.9 * PI))
}

pub(crate) fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

pub(crate) fn max_rel(a: &[C64], b: &[C64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm())) / scale
}

/// `|L − (ρ₊+ρ₋)(D₊+D₋)𝓛_A| / |L|` over random fluids, `A` and `λ`.
pub fn suite_factorization(draws: usize, seed: u64) -> SuiteResult {
    let name = "factorization";
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let p = random_stable_params(&mut r);
        let k = match derive_constants(&p, None) {
            Ok(k) => k,
            Err(e) => return SuiteResult::failed(name, &e),
        };
        let a = log_uniform(&mut r, 1e-3, 10.0);
        let lam = random_lambda(&mut r, 1e-3, 1e2);
        match eval_core_at(&p, &k, a, lam) {
            Ok(s) => {
                let f = (s.d_plus + s.d_minus) * (p.rho_plus + p.rho_minus) * s.script_l;
                worst = worst.max((s.l - f).norm() / s.l.norm());
            }
            Err(e) => return SuiteResult::failed(name, &e),
        }
    }
    SuiteResult::below(name, worst, 1e-12, draws, "max relative defect".into())
}

/// `F(A, 0) = 4(μ₊+μ₋)²A³`.
pub fn suite_lambda_zero(draws: usize, seed: u64) -> SuiteResult {
    let name = "lambda_zero";
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let p = random_stable_params(&mut r);
        let k = match derive_constants(&p, None) {
            Ok(k) => k,
            Err(e) => return SuiteResult::failed(name, &e),
        };
        let a = log_uniform(&mut r, 1e-3, 10.0);
        match eval_core_at(&p, &k, a, c(0.0, 0.0)) {
            Ok(s) => {
                let want = 4.0 * (p.mu_plus + p.mu_minus).powi(2) * a.powi(3);
                worst = worst.max(rel(s.f, c(want, 0.0)));
            }
            Err(e) => return SuiteResult::failed(name, &e),
        }
    }
    SuiteResult::below(name, worst, 1e-12, draws, "max relative error of F(A,0)".into())
}

/// Closed-form interface coefficients against the dense solve, and the
/// transmission residuals of the closed form.
pub fn suite_interface(draws: usize, seed: u64) -> SuiteResult {
    let name = "interface";
    let mut r = rng(seed);
    let mut worst_beta = 0.0f64;
    let mut worst_res = 0.0f64;
    for _ in 0..draws {
        let p = random_stable_params(&mut r);
        let k = match derive_constants(&p, None) {
            Ok(k) => k,
            Err(e) => return SuiteResult::failed(name, &e),
        };
        let dim = if r.gen::<bool>() { 2 } else { 1 };
        let amag = log_uniform(&mut r, 1e-2, 5.0);
        let dir: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        let dn = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        let xi: Vec<f64> = dir.iter().map(|x| x / dn * amag).collect();
        let n = dim + 1;
        let lam = random_lambda(&mut r, 1e-1, 10.0);
        let mut cv = || c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let g: Vec<C64> = (0..n).map(|_| cv()).collect();
        let h: Vec<C64> = (0..n).map(|_| cv()).collect();
        let out = (|| -> Result<(f64, f64)> {
            let pt = SymbolPoint::with_xi(&xi, lam)?;
            let s = eval_core(&p, &k, &pt)?;
            let rhs = InterfaceRhs::new(&p, &s, &xi, g.clone(), h.clone())?;
            let co = solve_interface_with(&p, &s, &xi, &rhs)?;
            let res = interface_residuals(&p, &s, &xi, &rhs, &co).max();
            let d = dense_interface_solve(&p, &s, &xi, &g, &h)?;
            let mut e = 0.0f64;
            for side in Side::BOTH {
                e = e.max(max_rel(&co.side(side).beta, &d.side(side).beta));
            }
            Ok((e, res))
        })();
        match out {
            Ok((e, res)) => {
                worst_beta = worst_beta.max(e);
                worst_res = worst_res.max(res);
            }
            Err(e) => return SuiteResult::failed(name, &e),
        }
    }
    SuiteResult {
        name: name.into(),
        passed: worst_beta <= 1e-12 && worst_res <= 1e-10,
        worst: worst_beta,
        threshold: 1e-12,
        samples: draws,
        detail: format!("max relative beta error {worst_beta:e}; max residual {worst_res:e} (limit 1e-10)"),
    }
}

/// Closed-form axial kernels against Fourier quadrature for the default fluids.
pub fn suite_axial_kernels(draws: usize, seed: u64) -> SuiteResult {
    let name = "axial_kernels";
    let p = FluidParams::default();
    let k = match derive_constants(&p, None) {
        Ok(k) => k,
        Err(e) => return SuiteResult::failed(name, &e),
    };
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let a_freq = r.gen_range(0.05..3.0);
        let lam = c(r.gen_range(-0.2..2.8), r.gen_range(-4.0..4.0));
        let off = r.gen_range(0.1..3.1) * if r.gen::<bool>() { -1.0 } else { 1.0 };
        let out = (|| -> Result<f64> {
            let pt = SymbolPoint::new(a_freq, lam)?;
            let s = eval_core(&p, &k, &pt)?;
            let pair = axial_kernel_integrals(&p, &k, &pt, off)?;
            let mut w = 0.0f64;
            for side in Side::BOTH {
                let got = if side == Side::Plus { pair.plus } else { pair.minus };
                let want = oracle_axial_kernels(&p, &s, side, off)?;
                for q in 0..5 {
                    w = w.max((got.m_form[q] - want[q]).norm() / want[q].norm().max(1e-8));
                }
            }
            Ok(w)
        })();
        match out {
            Ok(w) => worst = worst.max(w),
            Err(e) => return SuiteResult::failed(name, &e),
        }
    }
    SuiteResult::below(name, worst, 1e-6, draws, "max relative kernel error".into())
}

/// Zero counts and Rouché margins at log-spaced low frequencies.
pub fn suite_root_certification(p: &FluidParams, a0: f64, count: usize) -> SuiteResult {
    let name = "root_certification";
    let k = match derive_constants(p, None) {
        Ok(k) => k,
        Err(e) => return SuiteResult::failed(name, &e),
    };
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    for a in log_spaced(1e-4, a0, count) {
        for cert in certify_low(p, &k, a) {
            if cert.check.starts_with("rouche") {
                min_margin = min_margin.min(cert.value);
            }
            if !cert.pass {
                failures.push(format!("{}@A={a:e}", cert.check));
            }
        }
    }
    SuiteResult {
        name: name.into(),
        passed: failures.is_empty(),
        worst: -min_margin,
        threshold: 0.0,
        samples: count,
        detail: if failures.is_empty() {
            format!("all counts match; smallest relative Rouché margin {min_margin:e}")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    }
}

/// Slope of `|λ₊ − ζ₊|` against `A` and conjugacy of the pair.
pub fn suite_root_asymptotics(p: &FluidParams) -> SuiteResult {
    let name = "root_asymptotics";
    let out = (|| -> Result<(f64, f64)> {
        let k = derive_constants(p, None)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut conj = 0.0f64;
        for a in log_spaced(1e-4, 1e-2, 12) {
            let rp = find_roots(p, &k, a)?;
            let (zp, _) = zeta(&k, a);
            xs.push(a.ln());
            ys.push((rp.lambda_plus - zp).norm().ln());
            conj = conj.max((rp.lambda_minus - rp.lambda_plus.conj()).norm());
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Ok((sxy / sxx, conj))
    })();
    match out {
        Ok((slope, conj)) => SuiteResult {
            name: name.into(),
            passed: slope >= 1.45 && conj <= 1e-10,
            worst: slope,
            threshold: 1.45,
            samples: 12,
            detail: format!("slope {slope:.6} (needs >= 1.45); conjugacy defect {conj:e} (limit 1e-10)"),
        },
        Err(e) => SuiteResult::failed(name, &e),
    }
}

/// Residue-circle quadrature of `e^{λt}F/L` against the residue formula.
/// The circle is centred on the polished root with radius at most `1/t`, so
/// `e^{λt}` varies by a bounded factor around it and the comparison is not
/// swamped by cancellation at long times.
pub fn suite_residue(p: &FluidParams, a0: f64, pairs: usize, seed: u64) -> SuiteResult {
    let name = "residue_vs_quadrature";
    let mut r = rng(seed);
    let out = (|| -> Result<f64> {
        let k = derive_constants(p, None)?;
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let a = log_uniform(&mut r, 1e-3, 0.9 * a0);
            let t = log_uniform(&mut r, 1.0, 1e3);
            let roots = find_roots(p, &k, a)?;
            let (mp, mm) = residue_mode(p, &k, a, t)?;
            let gap = (roots.lambda_plus - roots.lambda_minus).norm();
            let radius = a.powf(1.5).min(1.0 / t).min(0.25 * gap);
            for (root, want) in [(roots.lambda_plus, mp), (roots.lambda_minus, mm)] {
                let circle = ContourPath::circle("res", root, radius);
                let got = eta_hat_component(p, &k, a, t, c(1.0, 0.0), &circle, 1e-11 * want.norm())?;
                worst = worst.max(rel(got, want));
            }
        }
        Ok(worst)
    })();
    match out {
        Ok(w) => SuiteResult::below(name, w, 1e-8, pairs, "max relative error over both roots".into()),
        Err(e) => SuiteResult::failed(name, &e),
    }
}

/// The right-most contour against the sum over the low-band decomposition.
/// Times stay short because the right-most contour carries `e^{λt}` with
/// `Re λ` near its anchor, and cancellation grows like that factor.
pub fn suite_path_independence(p: &FluidParams, a0: f64, pairs: usize, seed: u64) -> SuiteResult {
    let name = "path_independence";
    let mut r = rng(seed);
    let out = (|| -> Result<f64> {
        let k = derive_constants(p, None)?;
        let g0 = build_gamma0(&k);
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let a = log_uniform(&mut r, 1e-3, 0.9 * a0);
            let t = log_uniform(&mut r, 0.05, 0.5);
            let f = |l: C64| eval_core_at(p, &k, a, l).map(|s| s.f / s.l);
            let whole = integrate_exp(&g0, t, f, 1e-13)?;
            let lp = build_low_paths(&k, a)?;
            let mut sum = c(0.0, 0.0);
            for piece in lp.decomposition() {
                sum += integrate_exp(piece, t, f, 1e-14)?;
            }
            worst = worst.max(rel(whole, sum));
        }
        Ok(worst)
    })();
    match out {
        Ok(w) => SuiteResult::below(name, w, 1e-6, pairs, "max relative difference, t in [0.05, 0.5]".into()),
        Err(e) => SuiteResult::failed(name, &e),
    }
}

/// Velocity jump, divergence, stress jump and kinematic relation of the
/// computed solution at random frequencies.
pub fn suite_solution_properties(
    p: &FluidParams,
    cal: &FrequencyCalibration,
    freqs: usize,
    seed: u64,
) -> SuiteResult {
    let name = "solution_properties";
    let mut r = rng(seed);
    let out = (|| -> Result<(f64, f64, f64, f64)> {
        let k = derive_constants(p, None)?;
        let ev = SpectralEvaluator::new(
            p,
            &k,
            cal,
            SpectralOptions {
                rel_tol: 1e-13,
                ..Default::default()
            },
        )?;
        let nodes: Vec<Vec<f64>> = (0..freqs)
            .map(|_| vec![log_uniform(&mut r, 2e-2, 2.0) * if r.gen::<bool>() { 1.0 } else { -1.0 }])
            .collect();
        let mut probes = Probe::interface().to_vec();
        probes.push(Probe::new(Side::Plus, 0.8)?);
        probes.push(Probe::new(Side::Minus, -0.8)?);
        let grid = SpectralGrid { nodes, probes };
        let data = DrivingData::new(
            DataPreset::Gaussian {
                amplitude: 1.0,
                width: 1.0,
            },
            None,
            BandMask::default(),
        )?;
        let (mut jump, mut div, mut stress, mut kin) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for t in [1.0, 10.0] {
            let f = &evolve_spectral(&ev, &data, &[t], &grid)?[0];
            for w in stress_jump_residual(f, p, &k)? {
                stress = stress.max(w);
            }
            for (xi, v) in f.xi.iter().zip(&f.values) {
                for m in 0..2 {
                    let scale = v.u[0][m].norm().max(v.u[1][m].norm()).max(1e-300);
                    jump = jump.max((v.u[0][m] - v.u[1][m]).norm() / scale);
                }
                for j in 0..grid.probes.len() {
                    let d = C64::i() * xi[0] * v.u[j][0] + v.du[j][1];
                    let scale = (xi[0] * v.u[j][0]).norm() + v.du[j][1].norm();
                    if scale > 0.0 {
                        div = div.max(d.norm() / scale);
                    }
                }
                // Centred differences of η̂ against û_N(0): error ratios for
                // halved steps must sit near four.
                let d_hat = data.height.hat(xi);
                let un = v.u[1][1];
                let mut errs = Vec::new();
                for h in [0.2, 0.1, 0.05] {
                    let ep = ev.evaluate(xi, d_hat, None, BandMask::default(), t + h, &[])?.eta;
                    let em = ev.evaluate(xi, d_hat, None, BandMask::default(), t - h, &[])?.eta;
                    errs.push(((ep - em) / (2.0 * h) - un).norm());
                }
                for w in errs.windows(2) {
                    let ratio = w[0] / w[1];
                    kin = kin.max((ratio - 4.0).abs());
                }
            }
        }
        Ok((jump, div, stress, kin))
    })();
    match out {
        Ok((jump, div, stress, kin)) => SuiteResult {
            name: name.into(),
            passed: jump <= 1e-8 && div <= 1e-8 && stress <= 1e-8 && kin < 1.0,
            worst: jump.max(div).max(stress),
            threshold: 1e-8,
            samples: freqs * 2,
            detail: format!(
                "jump {jump:e}, divergence {div:e}, stress {stress:e}; worst |ratio - 4| of halved-step errors {kin:.4} (limit 1)"
            ),
        },
        Err(e) => SuiteResult::failed(name, &e),
    }
}

/// Stable fluids show no right half-plane root; swapping the densities
/// exposes one.
pub fn suite_stability(p: &FluidParams) -> SuiteResult {
    let name = "stability_dichotomy";
    let out = (|| -> Result<(bool, String)> {
        let samples = log_spaced(1e-3, 4.0, 12);
        let k = derive_constants(p, None)?;
        let stable = classify_stability(p, &k, &samples)?;
        let mut inv = *p;
        std::mem::swap(&mut inv.rho_plus, &mut inv.rho_minus);
        let ki = derive_constants(&inv, None)?;
        let unstable = classify_stability(&inv, &ki, &samples)?;
        let ok = stable == Stability::Stable && matches!(unstable, Stability::Unstable { .. });
        Ok((ok, format!("given fluids: {stable:?}; inverted densities: {unstable:?}")))
    })();
    match out {
        Ok((ok, detail)) => SuiteResult {
            name: name.into(),
            passed: ok,
            worst: if ok { 0.0 } else { 1.0 },
            threshold: 0.0,
            samples: 24,
            detail,
        },
        Err(e) => SuiteResult::failed(name, &e),
    }
}

/// FFT against the analytic transform, inversion back to the samples,
/// Parseval, and the radial inversion of a Gaussian.
pub fn suite_transform() -> SuiteResult {
    let name = "transform";
    let out = (|| -> Result<f64> {
        let preset = DataPreset::Gaussian {
            amplitude: 1.0,
            width: 1.0,
        };
        let grid = FrequencyGrid::uniform(256, 16.0)?;
        let exact = forward_d(&preset, &grid);
        let fft = forward_d_fft(&preset, &grid)?;
        let mut worst = max_rel(&exact, &fft);
        let field = inverse_1d(&exact, &grid, 0.0, "eta")?;
        let peak = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, v) in field.x.iter().zip(&field.values) {
            worst = worst.max((v - preset.value(&[*x])).abs() / peak);
        }
        let (phys, spec) = parseval_pair(&exact, &field, &grid);
        worst = worst.max((phys - spec).abs() / spec);
        // In two tangential dimensions, e^{−r²} has transform π e^{−A²/4}.
        let r = [0.0, 0.3, 1.0, 2.0];
        let v = inverse_radial(|a| c(PI * (-a * a / 4.0).exp(), 0.0), &r, 60.0, 1e-12)?;
        for (rr, vv) in r.iter().zip(&v) {
            worst = worst.max((vv.re - (-rr * rr).exp()).abs());
        }
        Ok(worst)
    })();
    match out {
        Ok(w) => SuiteResult::below(name, w, 1e-6, 4, "round trip, Parseval and radial inversion".into()),
        Err(e) => SuiteResult::failed(name, &e),
    }
}

/// Draw counts for each suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub factorization: usize,
    pub lambda_zero: usize,
    pub interface: usize,
    pub kernels: usize,
    pub certification: usize,
    pub residue_pairs: usize,
    pub path_pairs: usize,
    pub frequencies: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            factorization: 10_000,
            lambda_zero: 1_000,
            interface: 1_000,
            kernels: 100,
            certification: 16,
            residue_pairs: 20,
            path_pairs: 20,
            frequencies: 10,
        }
    }
}

/// Every oracle suite, in a fixed order.
pub fn run_all(p: &FluidParams, cal: &FrequencyCalibration, sizes: &SuiteSizes, seed: u64) -> Vec<SuiteResult> {
    vec![
        suite_factorization(sizes.factorization, seed),
        suite_lambda_zero(sizes.lambda_zero, seed + 1),
        suite_interface(sizes.interface, seed + 2),
        suite_axial_kernels(sizes.kernels, seed + 3),
        suite_root_certification(p, cal.a0, sizes.certification),
        suite_root_asymptotics(p),
        suite_residue(p, cal.a0, sizes.residue_pairs, seed + 4),
        suite_path_independence(p, cal.a0, sizes.path_pairs, seed + 5),
        suite_solution_properties(p, cal, sizes.frequencies, seed + 6),
        suite_stability(p),
        suite_transform(),
    ]
}

/// Calibrate with the default frequency range used by the suites.
pub fn default_calibration(p: &FluidParams) -> Result<FrequencyCalibration> {
    let k = derive_constants(p, None)?;
    calibrate(p, &k, 8.0)
}
