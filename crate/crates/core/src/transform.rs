//! Tangential Fourier transforms: data presets, the half-shifted FFT grid
//! for `N = 2`, radial inversion for `N = 3`, and band cutoffs.

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, euler_limit, gl};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Height data presets in physical space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataPreset {
    Zero,
    /// `amplitude · exp(−|x′|²/width²)`.
    Gaussian { amplitude: f64, width: f64 },
}

impl DataPreset {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DataPreset::Zero => Ok(()),
            DataPreset::Gaussian { amplitude, width } => {
                if amplitude.is_finite() && width.is_finite() && width > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!("bad Gaussian preset {self:?}")))
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            DataPreset::Zero => 0.0,
            DataPreset::Gaussian { amplitude, width } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                amplitude * (-r2 / (width * width)).exp()
            }
        }
    }

    /// Closed-form transform at `ξ′`; the preset dimension is `ξ′.len()`.
    pub fn hat(&self, xi: &[f64]) -> C64 {
        let a2: f64 = xi.iter().map(|v| v * v).sum();
        self.hat_radial(a2.sqrt(), xi.len())
    }

    /// Transform as a function of `A = |ξ′|` in `dim` tangential dimensions.
    pub fn hat_radial(&self, a: f64, dim: usize) -> C64 {
        match *self {
            DataPreset::Zero => C64::new(0.0, 0.0),
            DataPreset::Gaussian { amplitude, width } => {
                let c = (PI.sqrt() * width).powi(dim as i32);
                C64::new(amplitude * c * (-(width * a).powi(2) / 4.0).exp(), 0.0)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            DataPreset::Zero => true,
            DataPreset::Gaussian { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// Frequency sampling for the tangential variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FrequencyGrid {
    /// `N = 2`: `ξ_k = (k − M + ½)Δξ`, `k = 0..2M`, `Δξ = ξ_max/M`.
    /// Symmetric about zero, even count, and the zero frequency is never a node.
    Uniform { count: usize, xi_max: f64 },
    /// `N = 3` radial: strictly increasing positive magnitudes.
    Radial { nodes: Vec<f64> },
}

impl FrequencyGrid {
    pub fn uniform(count: usize, xi_max: f64) -> Result<Self> {
        let g = FrequencyGrid::Uniform { count, xi_max };
        g.validate()?;
        Ok(g)
    }

    pub fn radial(nodes: Vec<f64>) -> Result<Self> {
        let g = FrequencyGrid::Radial { nodes };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FrequencyGrid::Uniform { count, xi_max } => {
                if *count < 2 || count % 2 != 0 || !(*xi_max > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "uniform grid needs an even count >= 2 and xi_max > 0, got {count}, {xi_max}"
                    )));
                }
            }
            FrequencyGrid::Radial { nodes } => {
                if nodes.is_empty() || nodes[0] <= 0.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParams("radial grid must be positive and strictly increasing".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match self {
            FrequencyGrid::Uniform { .. } => 2,
            FrequencyGrid::Radial { .. } => 3,
        }
    }

    pub fn spacing(&self) -> Option<f64> {
        match self {
            FrequencyGrid::Uniform { count, xi_max } => Some(2.0 * xi_max / *count as f64),
            FrequencyGrid::Radial { .. } => None,
        }
    }

    /// Node coordinates: `ξ` for the uniform grid, `A` for the radial one.
    pub fn nodes(&self) -> Vec<f64> {
        match self {
            FrequencyGrid::Uniform { count, .. } => {
                let d = self.spacing().unwrap();
                let m = (*count / 2) as f64;
                (0..*count).map(|k| (k as f64 - m + 0.5) * d).collect()
            }
            FrequencyGrid::Radial { nodes } => nodes.clone(),
        }
    }

    /// Physical grid conjugate to the uniform frequency grid, `x_j = (j − M)Δx`.
    pub fn physical_nodes(&self) -> Option<Vec<f64>> {
        match self {
            FrequencyGrid::Uniform { count, .. } => {
                let dx = 2.0 * PI / (*count as f64 * self.spacing().unwrap());
                let m = (*count / 2) as f64;
                Some((0..*count).map(|j| (j as f64 - m) * dx).collect())
            }
            FrequencyGrid::Radial { .. } => None,
        }
    }
}

/// Physical-space values on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalField {
    pub t: f64,
    pub component: String,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest discarded imaginary part relative to the largest real value.
    pub imag_residue: f64,
}

impl PhysicalField {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,value,t,component")?;
        for (x, v) in self.x.iter().zip(&self.values) {
            writeln!(w, "{x:.17e},{v:.17e},{:.17e},{}", self.t, self.component)?;
        }
        Ok(())
    }
}

fn hermitian_defect(values: &[C64]) -> f64 {
    let n = values.len();
    let scale = values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    (0..n / 2)
        .map(|k| (values[k] - values[n - 1 - k].conj()).norm())
        .fold(0.0, f64::max)
        / scale
}

/// Transform samples on a uniform grid, analytic for presets.
pub fn forward_d(preset: &DataPreset, grid: &FrequencyGrid) -> Vec<C64> {
    let dim = grid.dimension() - 1;
    grid.nodes().into_iter().map(|a| preset.hat_radial(a.abs(), dim)).collect()
}

/// Transform by FFT of physical samples on the conjugate grid (`N = 2`).
pub fn forward_d_fft(preset: &DataPreset, grid: &FrequencyGrid) -> Result<Vec<C64>> {
    let x = grid
        .physical_nodes()
        .ok_or_else(|| Error::InvalidParams("FFT transform needs the uniform grid".into()))?;
    let samples: Vec<f64> = x.iter().map(|&v| preset.value(&[v])).collect();
    forward_samples(&samples, grid)
}

/// `v̂(ξ_k) ≈ Δx Σ_j e^{−i x_j ξ_k} v(x_j)` on the uniform grid pair.
pub fn forward_samples(samples: &[f64], grid: &FrequencyGrid) -> Result<Vec<C64>> {
    let c: Vec<C64> = samples.iter().map(|&v| C64::new(v, 0.0)).collect();
    forward_complex(&c, grid)
}

/// Complex-sample form of [`forward_samples`].
pub fn forward_complex(samples: &[C64], grid: &FrequencyGrid) -> Result<Vec<C64>> {
    let FrequencyGrid::Uniform { count, .. } = *grid else {
        return Err(Error::InvalidParams("FFT transform needs the uniform grid".into()));
    };
    if samples.len() != count {
        return Err(Error::InvalidParams("sample count does not match the grid".into()));
    }
    let k = count as f64;
    let m = (count / 2) as i64;
    let dx = 2.0 * PI / (k * grid.spacing().unwrap());
    let mut buf: Vec<C64> = samples
        .iter()
        .enumerate()
        .map(|(j, &v)| v * C64::from_polar(1.0, -PI * (j as i64 - m) as f64 / k))
        .collect();
    FftPlanner::new().plan_fft_forward(count).process(&mut buf);
    Ok((0..count)
        .map(|kk| {
            let kp = kk as i64 - m;
            let idx = kp.rem_euclid(count as i64) as usize;
            let sign = if kp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[idx] * (sign * dx)
        })
        .collect())
}

/// `v(x_j) = (1/2π) Σ_k Δξ e^{i x_j ξ_k} v̂(ξ_k)` on the conjugate grid.
/// Rejects non-Hermitian input since the output must be real.
pub fn inverse_1d(values: &[C64], grid: &FrequencyGrid, t: f64, component: &str) -> Result<PhysicalField> {
    let FrequencyGrid::Uniform { count, .. } = *grid else {
        return Err(Error::InvalidParams("1-D inversion needs the uniform grid".into()));
    };
    if values.len() != count {
        return Err(Error::InvalidParams("value count does not match the grid".into()));
    }
    let defect = hermitian_defect(values);
    if defect > 1e-9 {
        return Err(Error::SymmetryViolation { max_defect: defect });
    }
    let k = count as f64;
    let m = (count / 2) as i64;
    let d = grid.spacing().unwrap();
    let mut buf: Vec<C64> = values.to_vec();
    FftPlanner::new().plan_fft_inverse(count).process(&mut buf);
    let mut out = Vec::with_capacity(count);
    let mut imag = 0.0f64;
    for j in 0..count {
        let jp = j as i64 - m;
        let idx = jp.rem_euclid(count as i64) as usize;
        let sign = if jp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let v = buf[idx] * C64::from_polar(sign * d / (2.0 * PI), PI * jp as f64 / k);
        imag = imag.max(v.im.abs());
        out.push(v.re);
    }
    let scale = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let imag_residue = if scale > 0.0 { imag / scale } else { imag };
    if imag_residue > 1e-9 && scale > 0.0 {
        return Err(Error::SymmetryViolation {
            max_defect: imag_residue,
        });
    }
    Ok(PhysicalField {
        t,
        component: component.to_string(),
        x: grid.physical_nodes().unwrap(),
        values: out,
        imag_residue,
    })
}

/// Grid `L₂` norms on both sides of the uniform pair, for the Parseval check.
pub fn parseval_pair(values: &[C64], field: &PhysicalField, grid: &FrequencyGrid) -> (f64, f64) {
    let d = grid.spacing().unwrap_or(0.0);
    let dx = if field.x.len() > 1 { field.x[1] - field.x[0] } else { 0.0 };
    let phys = (field.values.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    let spec = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * d / (2.0 * PI)).sqrt();
    (phys, spec)
}

/// `k`-th positive zero of `J₀`, by McMahon's expansion and Newton polishing.
pub fn j0_zero(k: usize) -> f64 {
    let b = (k as f64 - 0.25) * PI;
    let mut x = b + 1.0 / (8.0 * b) - 124.0 / (3.0 * (8.0 * b).powi(3));
    for _ in 0..6 {
        let f = puruspe::Jn(0, x);
        let df = -puruspe::Jn(1, x);
        let step = f / df;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

/// `(1/2π)∫₀^∞ J₀(rA) v̂(A) A dA` at each radius: panels between the zeros of
/// `J₀(rA)`, summed up to `a_max` and Euler-accelerated beyond it when the
/// integrand has not died out.
pub fn inverse_radial<F: Fn(f64) -> C64>(f: F, r_grid: &[f64], a_max: f64, tol: f64) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        if !(r >= 0.0) {
            return Err(Error::InvalidParams(format!("radius must be nonnegative, got {r}")));
        }
        let integrand = |a: f64| f(a) * (a * puruspe::Jn(0, r * a));
        let v = if r == 0.0 {
            adaptive(0.0, a_max, &integrand, tol)?
        } else {
            let mut edges = vec![0.0];
            let mut k = 1;
            loop {
                let z = j0_zero(k) / r;
                if z >= a_max {
                    break;
                }
                edges.push(z);
                k += 1;
                if k > 200_000 {
                    return Err(Error::QuadratureFailure("too many Bessel panels".into()));
                }
            }
            let mut sum = C64::new(0.0, 0.0);
            for w in edges.windows(2) {
                sum += adaptive(w[0], w[1], &integrand, tol / edges.len() as f64)?;
            }
            let last = *edges.last().unwrap();
            let next = j0_zero(k) / r;
            let probe = integrand(0.5 * (last + next)).norm() * (next - last);
            if probe > tol {
                let rule = gl(32);
                let mut partials = Vec::with_capacity(64);
                let mut s = sum;
                let mut lo = last;
                for kk in k..k + 64 {
                    let hi = j0_zero(kk) / r;
                    s += rule.integrate_c(lo, hi, &integrand);
                    partials.push(s);
                    lo = hi;
                }
                let (lim, err) = euler_limit(&partials[partials.len() - 24..]);
                if err > 1e3 * tol.max(1e-14 * lim.norm()) {
                    return Err(Error::QuadratureFailure(format!("radial tail at r={r} did not settle ({err:e})")));
                }
                lim
            } else {
                sum
            }
        };
        out.push(v / (2.0 * PI));
    }
    Ok(out)
}

/// Smooth partition of unity on `[0, ∞)`: `1` for `r ≤ 1`, `0` for `r ≥ 2`,
/// `g(2 − r)/(g(2 − r) + g(r − 1))` in between with `g(s) = exp(−1/s)`.
pub fn bump(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let g = |s: f64| (-1.0 / s).exp();
        let (u, v) = (g(2.0 - r), g(r - 1.0));
        u / (u + v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub a0: f64,
    pub a_inf: f64,
}

impl CutoffSpec {
    pub fn new(a0: f64, a_inf: f64) -> Result<Self> {
        if !(a0 > 0.0 && 2.0 * a0 <= a_inf) {
            return Err(Error::InvalidParams(format!(
                "cutoffs need 0 < 2·A0 <= A_inf, got {a0}, {a_inf}"
            )));
        }
        Ok(CutoffSpec { a0, a_inf })
    }

    /// `[φ_low, φ_mid, φ_high]` at `A = |ξ′|`; the middle weight is the complement.
    pub fn weights(&self, a: f64) -> [f64; 3] {
        let low = bump(a / self.a0);
        let high = 1.0 - bump(a / self.a_inf);
        [low, 1.0 - low - high, high]
    }
}

/// Split sampled values into low, middle and high bands.
pub fn apply_cutoffs(values: &[C64], magnitudes: &[f64], spec: &CutoffSpec) -> [Vec<C64>; 3] {
    let mut out: [Vec<C64>; 3] = Default::default();
    for (v, &a) in values.iter().zip(magnitudes) {
        let w = spec.weights(a);
        let low = *v * w[0];
        let high = *v * w[2];
        out[0].push(low);
        out[1].push(*v - low - high);
        out[2].push(high);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> DataPreset {
        DataPreset::Gaussian {
            amplitude: 1.0,
            width: 1.0,
        }
    }

    #[test]
    fn gaussian_pair_closed_form() {
        let v = gauss().hat(&[1.3]);
        assert!((v.re - PI.sqrt() * (-1.69f64 / 4.0).exp()).abs() < 1e-15);
        assert_eq!(DataPreset::Zero.hat(&[0.2]), C64::new(0.0, 0.0));
    }

    #[test]
    fn grid_is_symmetric_and_skips_zero() {
        let g = FrequencyGrid::uniform(8, 2.0).unwrap();
        let n = g.nodes();
        assert_eq!(n.len(), 8);
        for k in 0..4 {
            assert_eq!(n[k], -n[7 - k]);
        }
        assert!(n.iter().all(|&x| x != 0.0));
        assert!(FrequencyGrid::uniform(7, 2.0).is_err());
        assert!(FrequencyGrid::radial(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn fft_transform_matches_closed_form() {
        let g = FrequencyGrid::uniform(1024, 32.0).unwrap();
        let a = forward_d(&gauss(), &g);
        let b = forward_d_fft(&gauss(), &g).unwrap();
        let nodes = g.nodes();
        let peak = PI.sqrt();
        for k in 0..1024 {
            if nodes[k].abs() <= 8.0 {
                let scale = a[k].norm().max(1e-8 * peak);
                assert!((a[k] - b[k]).norm() <= 1e-8 * scale.max(1e-6 * peak), "{} {} {}", nodes[k], a[k], b[k]);
            }
        }
    }

    #[test]
    fn inverse_recovers_gaussian_and_parseval_holds() {
        let g = FrequencyGrid::uniform(1024, 32.0).unwrap();
        let v = forward_d(&gauss(), &g);
        let f = inverse_1d(&v, &g, 0.0, "H").unwrap();
        for (x, y) in f.x.iter().zip(&f.values) {
            assert!((y - (-x * x).exp()).abs() <= 1e-8);
        }
        let (p, s) = parseval_pair(&v, &f, &g);
        assert!((p - s).abs() <= 1e-6 * s);
        assert!((p - (PI / 2.0).sqrt().sqrt()).abs() < 1e-6);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let g = FrequencyGrid::uniform(16, 4.0).unwrap();
        let mut v = forward_d(&gauss(), &g);
        v[3] += C64::new(0.0, 0.5);
        assert_eq!(inverse_1d(&v, &g, 0.0, "H").unwrap_err().kind(), "SymmetryViolation");
    }

    #[test]
    fn round_trip_on_band_limited_data() {
        let g = FrequencyGrid::uniform(256, 16.0).unwrap();
        let v = forward_d(&gauss(), &g);
        let f = inverse_1d(&v, &g, 0.0, "H").unwrap();
        let back = forward_samples(&f.values, &g).unwrap();
        for (x, y) in v.iter().zip(&back) {
            assert!((x - y).norm() <= 1e-9 * PI.sqrt());
        }
    }

    #[test]
    fn radial_inverse_against_two_dimensional_fft() {
        // Transform e^{−|x|²} by a 2-D FFT (rows, then columns) on the same
        // half-shifted grid and read off the constant of the radial pair.
        let m = 256usize;
        let g = FrequencyGrid::uniform(m, 32.0).unwrap();
        let x = g.physical_nodes().unwrap();
        let xi = g.nodes();
        let mut grid2: Vec<Vec<C64>> = x
            .iter()
            .map(|&x1| {
                let row: Vec<C64> = x.iter().map(|&x2| C64::new((-(x1 * x1 + x2 * x2)).exp(), 0.0)).collect();
                forward_complex(&row, &g).unwrap()
            })
            .collect();
        for k2 in 0..m {
            let col: Vec<C64> = grid2.iter().map(|r| r[k2]).collect();
            let t = forward_complex(&col, &g).unwrap();
            for (r, v) in grid2.iter_mut().zip(t) {
                r[k2] = v;
            }
        }
        let mut ratios = Vec::new();
        for k1 in 0..m {
            for k2 in 0..m {
                let a2 = xi[k1] * xi[k1] + xi[k2] * xi[k2];
                if a2 <= 16.0 {
                    ratios.push(grid2[k1][k2].re / (-a2 / 4.0).exp());
                }
            }
        }
        let c = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = ratios.iter().fold(0.0f64, |m, r| m.max((r - c).abs()));
        assert!(spread < 1e-10 * c, "pair constant not uniform: {spread}");
        assert!((c - PI).abs() < 1e-9, "pair constant {c}");
        let r = [0.0, 0.3, 1.0, 2.0];
        let v = inverse_radial(|a| C64::new(c * (-a * a / 4.0).exp(), 0.0), &r, 60.0, 1e-12).unwrap();
        for (rr, vv) in r.iter().zip(&v) {
            assert!((vv.re - (-rr * rr).exp()).abs() <= 1e-6, "{rr} {vv}");
        }
        let z = inverse_radial(|_| C64::new(0.0, 0.0), &r, 10.0, 1e-12).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn radial_origin_is_plain_moment() {
        let v = inverse_radial(|a| C64::new((-a).exp(), 0.0), &[0.0], 80.0, 1e-13).unwrap();
        assert!((v[0].re - 1.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn j0_zeros_are_zeros() {
        for k in 1..50 {
            let z = j0_zero(k);
            assert!(puruspe::Jn(0, z).abs() < 1e-13, "{k} {z}");
        }
        assert!((j0_zero(1) - 2.404825557695773).abs() < 1e-12);
    }

    #[test]
    fn cutoffs_partition_and_scale() {
        let c = CutoffSpec::new(0.25, 2.0).unwrap();
        for k in 0..2000 {
            let a = k as f64 * 0.003;
            let w = c.weights(a);
            assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
        assert_eq!(c.weights(0.25)[0], 1.0);
        assert_eq!(c.weights(0.5)[0], 0.0);
        assert_eq!(c.weights(2.0)[2], 0.0);
        assert_eq!(c.weights(4.0)[2], 1.0);
        let vals: Vec<C64> = (0..50).map(|k| C64::new(k as f64 * 0.37 - 3.0, 1.1)).collect();
        let mags: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let b = apply_cutoffs(&vals, &mags, &c);
        for k in 0..50 {
            let s = b[0][k] + b[1][k] + b[2][k];
            assert!((s - vals[k]).norm() <= 4.0 * f64::EPSILON * vals[k].norm());
        }
    }

    #[test]
    fn physical_csv_has_header() {
        let f = PhysicalField {
            t: 1.0,
            component: "H".into(),
            x: vec![0.0],
            values: vec![2.0],
            imag_residue: 0.0,
        };
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,value,t,component\n"));
    }
}
