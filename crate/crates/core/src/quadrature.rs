//! Gauss–Legendre panel rules, adaptive bisection for complex vector
//! integrands, and Euler acceleration of oscillatory panel sums.

use crate::error::{Error, Result};
use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

#[derive(Debug, Clone)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GlRule {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GlRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (m + h * x, h * w))
    }

    pub fn integrate_c<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

/// Cached rule of the given order. Orders outside the cache are built fresh.
pub fn gl(n: usize) -> &'static GlRule {
    static R8: OnceLock<GlRule> = OnceLock::new();
    static R16: OnceLock<GlRule> = OnceLock::new();
    static R32: OnceLock<GlRule> = OnceLock::new();
    static R64: OnceLock<GlRule> = OnceLock::new();
    match n {
        8 => R8.get_or_init(|| GlRule::new(8)),
        16 => R16.get_or_init(|| GlRule::new(16)),
        32 => R32.get_or_init(|| GlRule::new(32)),
        64 => R64.get_or_init(|| GlRule::new(64)),
        _ => panic!("uncached Gauss-Legendre order {n}"),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Absolute error target for the whole interval, in the max norm over components.
    pub abs_tol: f64,
    pub max_depth: u32,
    pub max_panels: usize,
    /// Differences below this fraction of a panel's absolute mass count as
    /// converged; raise it when the integrand itself carries relative noise.
    pub roundoff: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            abs_tol: 1e-12,
            max_depth: 60,
            max_panels: 200_000,
            roundoff: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveResult {
    pub value: Vec<C64>,
    pub error: f64,
    pub evaluations: usize,
    /// Integral of the max-norm of the integrand, used as a roundoff scale.
    pub l1: f64,
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// GL16 on one panel: returns (values, integral of max-norm).
fn panel<F: FnMut(f64, &mut [C64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [C64]) -> (Vec<C64>, f64) {
    let rule = gl(16);
    let mut acc = vec![C64::new(0.0, 0.0); dim];
    let mut l1 = 0.0;
    for (x, w) in rule.mapped(a, b) {
        buf.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        f(x, buf);
        for (s, v) in acc.iter_mut().zip(buf.iter()) {
            *s += *v * w;
        }
        l1 += max_norm(buf) * w.abs();
    }
    (acc, l1)
}

/// Adaptive bisection of `∫_a^b f` for a vector-valued integrand written into
/// the provided buffer. Each panel is accepted when its GL16 value agrees with
/// the sum over its two halves within its share of the tolerance, or when the
/// difference is at roundoff level relative to the panel's absolute mass.
pub fn adaptive_vec<F: FnMut(f64, &mut [C64])>(
    a: f64,
    b: f64,
    dim: usize,
    mut f: F,
    opts: AdaptiveOptions,
) -> Result<AdaptiveResult> {
    let mut out = vec![C64::new(0.0, 0.0); dim];
    if a == b {
        return Ok(AdaptiveResult {
            value: out,
            error: 0.0,
            evaluations: 0,
            l1: 0.0,
        });
    }
    let total = (b - a).abs();
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut evals = 16;
    let (whole, whole_l1) = panel(&mut f, a, b, dim, &mut buf);
    let mut stack = vec![(a, b, whole, whole_l1, 0u32)];
    let mut err = 0.0;
    let mut l1_total = 0.0;
    let mut panels = 0usize;
    while let Some((lo, hi, est, est_l1, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, l1l) = panel(&mut f, lo, mid, dim, &mut buf);
        let (right, l1r) = panel(&mut f, mid, hi, dim, &mut buf);
        evals += 32;
        let refined: Vec<C64> = left.iter().zip(&right).map(|(x, y)| x + y).collect();
        let diff = refined.iter().zip(&est).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        let share = opts.abs_tol * (hi - lo).abs() / total;
        let floor = opts.roundoff * (l1l + l1r).max(est_l1);
        if diff <= share.max(floor) || depth >= opts.max_depth {
            // A panel that stops refining is fatal only if it alone can spend
            // the budget; smaller leftovers are charged to the error total.
            if depth >= opts.max_depth && diff > share.max(floor) * 100.0 && diff > 0.1 * opts.abs_tol {
                return Err(Error::QuadratureFailure(format!(
                    "refinement stalled on [{lo:e}, {hi:e}] (difference {diff:e})"
                )));
            }
            for (o, v) in out.iter_mut().zip(&refined) {
                *o += v;
            }
            err += diff;
            l1_total += l1l + l1r;
            panels += 1;
            if panels > opts.max_panels {
                return Err(Error::QuadratureFailure("panel budget exhausted".into()));
            }
        } else {
            // Right half pushed first so the left half is processed next, keeping the
            // summation order deterministic from a to b.
            stack.push((mid, hi, right, l1r, depth + 1));
            stack.push((lo, mid, left, l1l, depth + 1));
        }
    }
    if err > opts.abs_tol.max(opts.roundoff * l1_total) * 10.0 {
        return Err(Error::QuadratureFailure(format!("error estimate {err:e} above tolerance {:e}", opts.abs_tol)));
    }
    Ok(AdaptiveResult {
        value: out,
        error: err,
        evaluations: evals,
        l1: l1_total,
    })
}

/// Scalar convenience wrapper around [`adaptive_vec`].
pub fn adaptive<F: FnMut(f64) -> C64>(a: f64, b: f64, mut f: F, abs_tol: f64) -> Result<C64> {
    let r = adaptive_vec(
        a,
        b,
        1,
        |x, out| out[0] = f(x),
        AdaptiveOptions {
            abs_tol,
            ..Default::default()
        },
    )?;
    Ok(r.value[0])
}

/// Euler transform of a sequence of partial sums by repeated neighbour
/// averaging. Returns the accelerated limit and the change from dropping the
/// last partial sum, which serves as an error estimate.
pub fn euler_limit(partials: &[C64]) -> (C64, f64) {
    fn reduce(p: &[C64]) -> C64 {
        let mut row: Vec<C64> = p.to_vec();
        while row.len() > 1 {
            row = row.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
        }
        row[0]
    }
    match partials.len() {
        0 => (C64::new(0.0, 0.0), 0.0),
        1 => (partials[0], f64::INFINITY),
        n => {
            let full = reduce(partials);
            let less = reduce(&partials[..n - 1]);
            (full, (full - less).norm())
        }
    }
}

/// Sum an oscillatory integral over `[x0, inf)` split at the given break
/// points (typically consecutive zeros of the oscillating factor). The panel
/// integrals alternate in sign, so their partial sums are Euler-accelerated.
pub fn oscillatory_tail<F, B>(mut panel_value: F, mut breakpoint: B, terms: usize) -> (C64, f64)
where
    F: FnMut(f64, f64) -> C64,
    B: FnMut(usize) -> f64,
{
    let mut partials = Vec::with_capacity(terms);
    let mut s = C64::new(0.0, 0.0);
    let mut lo = breakpoint(0);
    for k in 1..=terms {
        let hi = breakpoint(k);
        s += panel_value(lo, hi);
        partials.push(s);
        lo = hi;
    }
    // Acceleration works on the tail partial sums; the leading ones are exact.
    let keep = partials.len().min(24);
    euler_limit(&partials[partials.len() - keep..])
}
