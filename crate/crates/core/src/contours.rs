//! Integration paths in the λ-plane and `(1/2πi)∫ e^{λt} f(λ) dλ` along them.

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_vec, AdaptiveOptions};
use crate::symbols::{zeta, DerivedConstants};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    /// `λ = z_a(1 - s) + z_b s`, `s ∈ [0, 1]`.
    Line { z_a: C64, z_b: C64 },
    /// `λ = center + radius·e^{is}` from `s_start` to `s_end`.
    Arc {
        center: C64,
        radius: f64,
        s_start: f64,
        s_end: f64,
    },
    /// `λ = start + s·e^{i·angle}`, `s ∈ [0, s_max]`, traversed toward the
    /// start when `inward` is set. `s_max = None` means truncation is chosen
    /// at integration time from the decay of `e^{λt}`.
    Ray {
        start: C64,
        angle: f64,
        s_max: Option<f64>,
        inward: bool,
    },
}

impl Segment {
    pub fn point(&self, s: f64) -> C64 {
        match *self {
            Segment::Line { z_a, z_b } => z_a * (1.0 - s) + z_b * s,
            Segment::Arc { center, radius, .. } => center + C64::from_polar(radius, s),
            Segment::Ray { start, angle, .. } => start + C64::from_polar(s, angle),
        }
    }

    pub fn derivative(&self, s: f64) -> C64 {
        match *self {
            Segment::Line { z_a, z_b } => z_b - z_a,
            Segment::Arc { radius, .. } => C64::i() * C64::from_polar(radius, s),
            Segment::Ray { angle, .. } => C64::from_polar(1.0, angle),
        }
    }

    /// Parameter interval in traversal order, with `s_max` substituted for
    /// open rays.
    pub fn traversal(&self, ray_length: f64) -> (f64, f64) {
        match *self {
            Segment::Line { .. } => (0.0, 1.0),
            Segment::Arc { s_start, s_end, .. } => (s_start, s_end),
            Segment::Ray { s_max, inward, .. } => {
                let m = s_max.unwrap_or(ray_length);
                if inward {
                    (m, 0.0)
                } else {
                    (0.0, m)
                }
            }
        }
    }

    pub fn first_point(&self, ray_length: f64) -> C64 {
        self.point(self.traversal(ray_length).0)
    }

    pub fn last_point(&self, ray_length: f64) -> C64 {
        self.point(self.traversal(ray_length).1)
    }

    pub fn length(&self, ray_length: f64) -> f64 {
        match *self {
            Segment::Line { z_a, z_b } => (z_b - z_a).norm(),
            Segment::Arc {
                radius, s_start, s_end, ..
            } => radius * (s_end - s_start).abs(),
            Segment::Ray { s_max, .. } => s_max.unwrap_or(ray_length),
        }
    }

    fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { z_a, z_b } => Segment::Line { z_a: z_b, z_b: z_a },
            Segment::Arc {
                center,
                radius,
                s_start,
                s_end,
            } => Segment::Arc {
                center,
                radius,
                s_start: s_end,
                s_end: s_start,
            },
            Segment::Ray {
                start,
                angle,
                s_max,
                inward,
            } => Segment::Ray {
                start,
                angle,
                s_max,
                inward: !inward,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPath {
    pub name: String,
    pub segments: Vec<Segment>,
}

impl ContourPath {
    pub fn new(name: impl Into<String>, segments: Vec<Segment>) -> Self {
        ContourPath {
            name: name.into(),
            segments,
        }
    }

    pub fn circle(name: impl Into<String>, center: C64, radius: f64) -> Self {
        ContourPath::new(
            name,
            vec![Segment::Arc {
                center,
                radius,
                s_start: 0.0,
                s_end: 2.0 * PI,
            }],
        )
    }

    pub fn reversed(&self) -> ContourPath {
        ContourPath::new(
            format!("{}(reversed)", self.name),
            self.segments.iter().rev().map(Segment::reversed).collect(),
        )
    }

    pub fn has_open_rays(&self) -> bool {
        self.segments
            .iter()
            .any(|s| matches!(s, Segment::Ray { s_max: None, .. }))
    }

    /// Maximum gap between consecutive segment endpoints (and the closing gap
    /// when `closed`).
    pub fn continuity_defect(&self, closed: bool) -> f64 {
        let mut gap = 0.0f64;
        for w in self.segments.windows(2) {
            gap = gap.max((w[0].last_point(0.0) - w[1].first_point(0.0)).norm());
        }
        if closed {
            if let (Some(f), Some(l)) = (self.segments.first(), self.segments.last()) {
                gap = gap.max((l.last_point(0.0) - f.first_point(0.0)).norm());
            }
        }
        gap
    }
}

/// Closed boundary together with the name of the region it encloses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub boundary: ContourPath,
}

/// Right-most contour: two rays at angles `±(π − θ₁)` from `2λ₁/sin θ₁`,
/// traversed from the lower-left to the upper-left.
pub fn build_gamma0(consts: &DerivedConstants) -> ContourPath {
    let anchor = C64::new(consts.gamma0_anchor(), 0.0);
    let ang = PI - consts.theta1;
    ContourPath::new(
        "gamma0",
        vec![
            Segment::Ray {
                start: anchor,
                angle: -ang,
                s_max: None,
                inward: true,
            },
            Segment::Ray {
                start: anchor,
                angle: ang,
                s_max: None,
                inward: false,
            },
        ],
    )
}

/// Intersection of the lines `p + u·d` and `q + v·e`; returns `(u, v)`.
fn line_intersection(p: C64, d: C64, q: C64, e: C64) -> Option<(f64, f64)> {
    let det = d.re * (-e.im) - d.im * (-e.re);
    if det.abs() < 1e-14 * d.norm() * e.norm() {
        return None;
    }
    let r = q - p;
    let u = (r.re * (-e.im) - r.im * (-e.re)) / det;
    let v = (d.re * r.im - d.im * r.re) / det;
    Some((u, v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowPaths {
    pub a: f64,
    pub z1: [C64; 2],
    pub z2: [C64; 2],
    pub z3: [C64; 2],
    /// Small arcs around the branch point, oriented for the upward sweep
    /// (`[0]` is the upper arc, `[1]` the lower).
    pub gamma1: [ContourPath; 2],
    pub gamma2: [ContourPath; 2],
    pub gamma3: ContourPath,
    pub gamma4: [ContourPath; 2],
    pub gamma5: [ContourPath; 2],
    pub res: [ContourPath; 2],
    pub k: Region,
    pub k_pm: [Region; 2],
}

impl LowPaths {
    /// Pieces whose sum equals the right-most contour, in traversal order,
    /// residue circles last.
    pub fn decomposition(&self) -> Vec<&ContourPath> {
        vec![
            &self.gamma5[1],
            &self.gamma4[1],
            &self.gamma1[1],
            &self.gamma1[0],
            &self.gamma4[0],
            &self.gamma5[0],
            &self.res[0],
            &self.res[1],
        ]
    }

    /// The open part of the decomposition as a single path from the lower-left
    /// to the upper-left.
    pub fn sweep(&self) -> ContourPath {
        let mut segs = Vec::new();
        for p in &self.decomposition()[..6] {
            segs.extend(p.segments.iter().cloned());
        }
        ContourPath::new("low_sweep", segs)
    }
}

pub fn build_low_paths(consts: &DerivedConstants, a: f64) -> Result<LowPaths> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::GeometryError(format!("low paths need A > 0, got {a}")));
    }
    let z0 = consts.z0;
    let l1 = consts.lambda1;
    let a2 = a * a;
    let center = C64::new(-0.5 * z0 * a2, 0.0);
    let rad = 0.25 * z0 * a2;
    let z1p = center + C64::new(0.0, rad);
    let z1m = center - C64::new(0.0, rad);
    let th2 = PI - consts.theta2;
    let z2p = C64::from_polar(l1, th2);
    let z2m = z2p.conj();
    if center.norm() + rad >= l1 {
        return Err(Error::GeometryError(format!(
            "inner arc (radius {rad:e}) reaches the outer arc of radius {l1}; A={a} too large for lambda1"
        )));
    }

    let anchor = C64::new(consts.gamma0_anchor(), 0.0);
    let dir = C64::from_polar(1.0, PI - consts.theta1);
    let diag = C64::from_polar(1.0, 0.75 * PI);
    let (u, s) = line_intersection(anchor, dir, C64::new(0.0, 0.0), diag)
        .ok_or_else(|| Error::GeometryError("ray and diagonal are parallel".into()))?;
    if !(u > 0.0 && s > 0.0) {
        return Err(Error::GeometryError("diagonal misses the right-most contour".into()));
    }
    let z3p = anchor + dir * u;
    let z3m = z3p.conj();
    if z3p.norm() <= z1p.norm() {
        return Err(Error::GeometryError("connecting line degenerates".into()));
    }

    let (zp, zm) = zeta(consts, a);
    let r_res = a.powf(1.5);

    let g1p = ContourPath::new(
        "gamma1+",
        vec![Segment::Arc {
            center,
            radius: rad,
            s_start: 0.0,
            s_end: 0.5 * PI,
        }],
    );
    let g1m = ContourPath::new(
        "gamma1-",
        vec![Segment::Arc {
            center,
            radius: rad,
            s_start: -0.5 * PI,
            s_end: 0.0,
        }],
    );
    let g2p = ContourPath::new("gamma2+", vec![Segment::Line { z_a: z1p, z_b: z2p }]);
    let g2m = ContourPath::new("gamma2-", vec![Segment::Line { z_a: z1m, z_b: z2m }]);
    let g3 = ContourPath::new(
        "gamma3",
        vec![Segment::Arc {
            center: C64::new(0.0, 0.0),
            radius: l1,
            s_start: -th2,
            s_end: th2,
        }],
    );
    let g4p = ContourPath::new("gamma4+", vec![Segment::Line { z_a: z1p, z_b: z3p }]);
    let g4m = ContourPath::new("gamma4-", vec![Segment::Line { z_a: z3m, z_b: z1m }]);
    let ang = PI - consts.theta1;
    let g5p = ContourPath::new(
        "gamma5+",
        vec![Segment::Ray {
            start: z3p,
            angle: ang,
            s_max: None,
            inward: false,
        }],
    );
    let g5m = ContourPath::new(
        "gamma5-",
        vec![Segment::Ray {
            start: z3m,
            angle: -ang,
            s_max: None,
            inward: true,
        }],
    );
    let res_p = ContourPath::circle("res+", zp, r_res);
    let res_m = ContourPath::circle("res-", zm, r_res);

    let k_boundary = ContourPath::new(
        "K",
        vec![
            g3.segments[0].clone(),
            Segment::Line { z_a: z2p, z_b: z1p },
            Segment::Arc {
                center,
                radius: rad,
                s_start: 0.5 * PI,
                s_end: -0.5 * PI,
            },
            Segment::Line { z_a: z1m, z_b: z2m },
        ],
    );
    Ok(LowPaths {
        a,
        z1: [z1p, z1m],
        z2: [z2p, z2m],
        z3: [z3p, z3m],
        gamma1: [g1p, g1m],
        gamma2: [g2p, g2m],
        gamma3: g3,
        gamma4: [g4p, g4m],
        gamma5: [g5p, g5m],
        res: [res_p.clone(), res_m.clone()],
        k: Region {
            name: "K".into(),
            boundary: k_boundary,
        },
        k_pm: [
            Region {
                name: "K+".into(),
                boundary: res_p,
            },
            Region {
                name: "K-".into(),
                boundary: res_m,
            },
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighPaths {
    pub a0: f64,
    pub y_top: f64,
    pub gamma6: ContourPath,
    pub gamma7: [ContourPath; 2],
}

impl HighPaths {
    /// Lower ray inward, vertical segment upward, upper ray outward.
    pub fn sweep(&self) -> ContourPath {
        let mut segs = self.gamma7[1].segments.clone();
        segs.extend(self.gamma6.segments.iter().cloned());
        segs.extend(self.gamma7[0].segments.iter().cloned());
        ContourPath::new("high_sweep", segs)
    }
}

/// Height of the right-most contour above the abscissa `Re λ = -x`.
pub fn gamma0_height_at(consts: &DerivedConstants, x: f64) -> f64 {
    (consts.gamma0_anchor() + x) * consts.theta1.tan()
}

pub fn build_high_paths(consts: &DerivedConstants, a0: f64, y_top: f64) -> Result<HighPaths> {
    if !(a0 > 0.0 && a0 < 1.0 && y_top > 0.0) {
        return Err(Error::GeometryError(format!("need a0 in (0,1), y_top > 0; got {a0}, {y_top}")));
    }
    let top = C64::new(-a0, y_top);
    let bot = top.conj();
    let ang = PI - consts.theta1;
    Ok(HighPaths {
        a0,
        y_top,
        gamma6: ContourPath::new("gamma6", vec![Segment::Line { z_a: bot, z_b: top }]),
        gamma7: [
            ContourPath::new(
                "gamma7+",
                vec![Segment::Ray {
                    start: top,
                    angle: ang,
                    s_max: None,
                    inward: false,
                }],
            ),
            ContourPath::new(
                "gamma7-",
                vec![Segment::Ray {
                    start: bot,
                    angle: -ang,
                    s_max: None,
                    inward: true,
                }],
            ),
        ],
    })
}

/// Rectangle `-a ≤ Re λ ≤ 0`, `|Im λ| ≤ b`, positively oriented.
pub fn rectangle_region(name: &str, x_min: f64, x_max: f64, b: f64) -> Region {
    let c = [
        C64::new(x_max, -b),
        C64::new(x_max, b),
        C64::new(x_min, b),
        C64::new(x_min, -b),
    ];
    Region {
        name: name.into(),
        boundary: ContourPath::new(
            name,
            (0..4)
                .map(|k| Segment::Line {
                    z_a: c[k],
                    z_b: c[(k + 1) % 4],
                })
                .collect(),
        ),
    }
}

pub fn lambda_rect(a: f64, b: f64) -> Region {
    rectangle_region("Lambda", -a, 0.0, b)
}

#[derive(Debug, Clone)]
pub struct ExpIntegral {
    pub value: Vec<C64>,
    pub error: f64,
    /// Bound on the discarded ray tails.
    pub tail: f64,
    pub evaluations: usize,
}

/// Ray truncation length for `e^{λt}` decay below `tol` given a bound on the
/// integrand magnitude.
pub fn ray_truncation(start: C64, angle: f64, t: f64, tol: f64, bound: f64) -> f64 {
    let c = angle.cos();
    debug_assert!(c < 0.0);
    let s = (tol.ln() - (1.0 + bound).ln() - start.re * t) / (c * t);
    s.max(0.0)
}

/// `(1/2πi)∫_path e^{λt} f(λ) dλ` for a vector-valued integrand. The
/// integrand writes its values into the buffer and may fail.
pub fn integrate_exp_vec<F>(path: &ContourPath, t: f64, dim: usize, mut f: F, tol: f64) -> Result<ExpIntegral>
where
    F: FnMut(C64, &mut [C64]) -> Result<()>,
{
    if !(t > 0.0) && path.has_open_rays() {
        return Err(Error::QuadratureFailure(format!("rays need t > 0, got {t}")));
    }
    let two_pi = 2.0 * PI;
    let nseg = path.segments.len().max(1) as f64;
    let seg_tol = two_pi * tol / nseg;
    let mut total = vec![C64::new(0.0, 0.0); dim];
    let mut err = 0.0;
    let mut tail = 0.0;
    let mut evals = 0;
    let mut failure: Option<Error> = None;
    let mut buf = vec![C64::new(0.0, 0.0); dim];

    for seg in &path.segments {
        let mut ray_len = 0.0;
        if let Segment::Ray {
            start,
            angle,
            s_max: None,
            ..
        } = *seg
        {
            if angle.cos() >= 0.0 {
                return Err(Error::GeometryError(format!("ray at angle {angle} does not decay")));
            }
            let scale = 1.0 + start.norm();
            let mut bound = 0.0f64;
            for k in 0..8 {
                let s = if k == 0 { 0.0 } else { scale * 2f64.powi(k - 1) };
                f(start + C64::from_polar(s, angle), &mut buf)?;
                bound = bound.max(buf.iter().fold(0.0f64, |m, z| m.max(z.norm())));
            }
            evals += 8;
            ray_len = ray_truncation(start, angle, t, seg_tol, bound);
            let end = start + C64::from_polar(ray_len, angle);
            tail += (end.re * t).exp() * bound / (-angle.cos() * t) / two_pi;
        }
        let (s0, s1) = seg.traversal(ray_len);
        let seg_c = seg.clone();
        let r = adaptive_vec(
            s0,
            s1,
            dim,
            |s, out| {
                if failure.is_some() {
                    return;
                }
                let lam = seg_c.point(s);
                let w = (lam * t).exp() * seg_c.derivative(s);
                match f(lam, out) {
                    Ok(()) => out.iter_mut().for_each(|z| *z *= w),
                    Err(e) => failure = Some(e),
                }
            },
            AdaptiveOptions {
                abs_tol: seg_tol,
                ..Default::default()
            },
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        for (o, v) in total.iter_mut().zip(&r.value) {
            *o += v;
        }
        err += r.error;
        evals += r.evaluations;
    }
    let inv = C64::new(0.0, -1.0 / two_pi);
    total.iter_mut().for_each(|z| *z *= inv);
    Ok(ExpIntegral {
        value: total,
        error: err / two_pi,
        tail,
        evaluations: evals,
    })
}

/// Scalar form of [`integrate_exp_vec`].
pub fn integrate_exp<F>(path: &ContourPath, t: f64, mut f: F, tol: f64) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let r = integrate_exp_vec(
        path,
        t,
        1,
        |lam, out| {
            out[0] = f(lam)?;
            Ok(())
        },
        tol,
    )?;
    Ok(r.value[0])
}

/// Sample points along a closed path, distributed by arclength.
pub fn sample_boundary(path: &ContourPath, samples: usize) -> Vec<(usize, f64)> {
    let lens: Vec<f64> = path.segments.iter().map(|s| s.length(0.0)).collect();
    let total: f64 = lens.iter().sum();
    let mut pts = Vec::with_capacity(samples + path.segments.len());
    for (k, seg) in path.segments.iter().enumerate() {
        let n = ((samples as f64 * lens[k] / total).ceil() as usize).max(4);
        let (s0, s1) = seg.traversal(0.0);
        for j in 0..n {
            pts.push((k, s0 + (s1 - s0) * j as f64 / n as f64));
        }
    }
    pts
}

fn arg_increment<F: FnMut(C64) -> C64>(
    f: &mut F,
    seg: &Segment,
    s0: f64,
    s1: f64,
    v0: C64,
    v1: C64,
    depth: u32,
    min_mod: &mut f64,
) -> Result<f64> {
    let d = (v1 / v0).arg();
    if d.abs() <= PI / 4.0 || depth >= 30 {
        if depth >= 30 && d.abs() > PI / 2.0 {
            return Err(Error::BoundaryZero {
                at: seg.point(0.5 * (s0 + s1)),
                magnitude: v0.norm().min(v1.norm()),
            });
        }
        return Ok(d);
    }
    let sm = 0.5 * (s0 + s1);
    let vm = f(seg.point(sm));
    *min_mod = min_mod.min(vm.norm());
    Ok(arg_increment(f, seg, s0, sm, v0, vm, depth + 1, min_mod)?
        + arg_increment(f, seg, sm, s1, vm, v1, depth + 1, min_mod)?)
}

fn winding<F: FnMut(C64) -> C64>(region: &Region, f: &mut F, samples: usize) -> Result<(f64, f64, f64)> {
    let path = &region.boundary;
    let pts = sample_boundary(path, samples);
    let vals: Vec<C64> = pts.iter().map(|&(k, s)| f(path.segments[k].point(s))).collect();
    let mut min_mod = vals.iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
    let max_mod = vals.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut total = 0.0;
    for i in 0..pts.len() {
        let (k, s) = pts[i];
        let seg = &path.segments[k];
        // Next sample: same segment, or the end of this segment.
        let (s_next, v_next) = if i + 1 < pts.len() && pts[i + 1].0 == k {
            (pts[i + 1].1, vals[i + 1])
        } else {
            let e = seg.traversal(0.0).1;
            (e, f(seg.point(e)))
        };
        total += arg_increment(f, seg, s, s_next, vals[i], v_next, 0, &mut min_mod)?;
    }
    Ok((total / (2.0 * PI), min_mod, max_mod))
}

/// Winding number of `f` along a closed positively oriented boundary, which
/// equals the number of zeros inside when `f` is analytic there. The count is
/// confirmed by repeating with twice the samples.
pub fn argument_principle_count<F: FnMut(C64) -> C64>(region: &Region, mut f: F, samples: usize) -> Result<i64> {
    if region.boundary.has_open_rays() {
        return Err(Error::GeometryError("argument principle needs a bounded boundary".into()));
    }
    let (w1, min1, max1) = winding(region, &mut f, samples)?;
    let (w2, min2, _) = winding(region, &mut f, 2 * samples)?;
    let min_mod = min1.min(min2);
    if !(min_mod > 1e-13 * max1) {
        return Err(Error::BoundaryZero {
            at: region.boundary.segments[0].first_point(0.0),
            magnitude: min_mod,
        });
    }
    let (n1, n2) = (w1.round(), w2.round());
    if n1 != n2 || (w1 - n1).abs() > 1e-6 {
        return Err(Error::GeometryError(format!(
            "winding number unstable under refinement ({w1} vs {w2}) on {}",
            region.name
        )));
    }
    Ok(n1 as i64)
}
