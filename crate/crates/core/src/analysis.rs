//! Numerical verification: scalar curvature, the Ricci-flatness criterion,
//! large-distance behavior of `V`, Killing field norms and the drift of `ξ`.

use serde::Serialize;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::harmonic::{HalfPlanePoint, NutParameter};
use crate::polygon::{det2, MomentPolygon};
use crate::potential::{hessian_from_jet, Sym2};

pub const DEFAULT_FD_FACTOR: f64 = 1e-3;
pub const DEFAULT_CURVATURE_TOL: f64 = 1e-5;

fn hess_inv_at(chart: &Chart, x: [f64; 2], hint: HalfPlanePoint) -> Result<Sym2> {
    let p = chart.invert(x, Some(hint))?;
    Ok(hessian_from_jet(&chart.jet(p), p.r).hess_inv)
}

/// `s = −(∂₁₁u¹¹ + 2∂₁₂u¹² + ∂₂₂u²²)` by fourth-order central differences
/// of the closed-form `Hess(u)⁻¹` with step `h` in action coordinates.
pub fn scalar_curvature(chart: &Chart, x: [f64; 2], h: f64) -> Result<f64> {
    let p0 = chart.invert(x, None)?;
    scalar_curvature_from(chart, x, p0, h)
}

const FIRST: [(f64, f64); 4] = [
    (-2.0, 1.0 / 12.0),
    (-1.0, -8.0 / 12.0),
    (1.0, 8.0 / 12.0),
    (2.0, -1.0 / 12.0),
];
const SECOND: [(f64, f64); 5] = [
    (-2.0, -1.0 / 12.0),
    (-1.0, 16.0 / 12.0),
    (0.0, -30.0 / 12.0),
    (1.0, 16.0 / 12.0),
    (2.0, -1.0 / 12.0),
];

fn scalar_curvature_from(chart: &Chart, x: [f64; 2], p0: HalfPlanePoint, h: f64) -> Result<f64> {
    let at = |i: f64, j: f64| hess_inv_at(chart, [x[0] + i * h, x[1] + j * h], p0);
    let centre = at(0.0, 0.0)?;
    let (mut d11, mut d22, mut d12) = (0.0, 0.0, 0.0);
    for &(k, w) in &SECOND {
        let (e, n) = if k == 0.0 {
            (centre, centre)
        } else {
            (at(k, 0.0)?, at(0.0, k)?)
        };
        d11 += w * e[0][0];
        d22 += w * n[1][1];
    }
    for &(i, wi) in &FIRST {
        for &(j, wj) in &FIRST {
            d12 += wi * wj * at(i, j)?[0][1];
        }
    }
    Ok(-(d11 + 2.0 * d12 + d22) / (h * h))
}

/// Curvature at one point from the step pair `h`, `h/2` selected by
/// [`curvature_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub x: [f64; 2],
    pub step: f64,
    pub s_h: f64,
    pub s_half: f64,
    /// Richardson extrapolation `(16 s(h/2) − s(h)) / 15`.
    pub s: f64,
}

impl CurvatureSample {
    pub fn step_gap(&self) -> f64 {
        (self.s_h - self.s_half).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub points: Vec<[f64; 2]>,
    pub s_values: Vec<f64>,
    pub samples: Vec<CurvatureSample>,
    pub max_abs_s: f64,
    pub max_step_gap: f64,
    /// Step as a fraction of the distance to the boundary, see [`curvature_steps`].
    pub fd_step: f64,
}

impl CurvatureReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_abs_s < tol && self.max_step_gap < tol
    }
}

/// Number of doublings of the base step tried by [`curvature_report`].
pub const STEP_LADDER: u32 = 3;

/// `fd_step · min_i ℓ_i(x)` rounded down to a power of two, together with
/// `x` rounded to a multiple of half that step, so that every stencil point
/// of the step ladder is exactly representable.
pub fn curvature_stencil(polygon: &MomentPolygon, x: [f64; 2], fd_step: f64) -> ([f64; 2], f64) {
    let h = (fd_step * polygon.min_edge_value(x)).log2().floor().exp2();
    let q = 0.5 * h;
    ([(x[0] / q).round() * q, (x[1] / q).round() * q], h)
}

/// Scalar curvature over a set of interior points. Each point is moved to
/// the centre chosen by [`curvature_stencil`]; `s` is evaluated at the steps
/// `h · 2^k` for `k = 0..=STEP_LADDER`, and the halving pair with the
/// smallest `|s(h) − s(h/2)|` is Richardson-extrapolated.
pub fn curvature_report(chart: &Chart, points: &[[f64; 2]], fd_step: f64, exec: Execution) -> Result<CurvatureReport> {
    let samples = exec::try_map(exec, points, |&x| {
        let (x, h) = curvature_stencil(chart.polygon(), x, fd_step);
        let p0 = chart.invert(x, None)?;
        let ladder = (0..=STEP_LADDER)
            .map(|k| scalar_curvature_from(chart, x, p0, h * f64::from(1u32 << k)))
            .collect::<Result<Vec<_>>>()?;
        let k = (0..ladder.len() - 1)
            .min_by(|&i, &j| {
                let gi = (ladder[i + 1] - ladder[i]).abs();
                let gj = (ladder[j + 1] - ladder[j]).abs();
                gi.total_cmp(&gj)
            })
            .unwrap_or(0);
        let (s_half, s_h) = (ladder[k], ladder[k + 1]);
        Ok::<_, Error>(CurvatureSample {
            x,
            step: h * f64::from(2u32 << k),
            s_h,
            s_half,
            s: (16.0 * s_half - s_h) / 15.0,
        })
    })?;
    let max_abs_s = samples.iter().map(|s| s.s.abs()).fold(0.0, f64::max);
    let max_step_gap = samples.iter().map(|s| s.step_gap()).fold(0.0, f64::max);
    Ok(CurvatureReport {
        points: points.to_vec(),
        s_values: samples.iter().map(|s| s.s).collect(),
        samples,
        max_abs_s,
        max_step_gap,
        fd_step,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciClassification {
    pub ricci_flat: bool,
    /// The unique `η` with `η·ν_1 = η·ν_2 = 1`.
    pub eta: Option<[f64; 2]>,
    pub reason: String,
}

/// Ricci-flat iff some `η` has `η·ν_j = 1` for every edge and `η·ν = 0`.
pub fn ricci_classify(polygon: &MomentPolygon, nu: NutParameter) -> RicciClassification {
    let n = polygon.normals();
    // det(ν_1, ν_2) = −1, so the 2×2 system is unimodular.
    let eta = [n[0].b - n[1].b, n[1].a - n[0].a];
    let eta_f = [eta[0] as f64, eta[1] as f64];
    let dot = |v: &crate::polygon::LatticeVector| eta[0] as i128 * v.a as i128 + eta[1] as i128 * v.b as i128;
    if let Some(j) = n.iter().position(|v| dot(v) != 1) {
        return RicciClassification {
            ricci_flat: false,
            eta: Some(eta_f),
            reason: format!(
                "eta = ({}, {}) gives eta.nu_{} = {} != 1",
                eta[0],
                eta[1],
                j + 1,
                dot(&n[j])
            ),
        };
    }
    let eta_nu = eta_f[0] * nu.alpha + eta_f[1] * nu.beta;
    let scale = 1.0 + nu.alpha.abs() + nu.beta.abs();
    if eta_nu.abs() > 1e-12 * scale {
        return RicciClassification {
            ricci_flat: false,
            eta: Some(eta_f),
            reason: format!("eta.nu_j = 1 for all j but eta.nu = {eta_nu} != 0"),
        };
    }
    RicciClassification {
        ricci_flat: true,
        eta: Some(eta_f),
        reason: format!(
            "eta = ({}, {}) has eta.nu_j = 1 for all j and eta.nu = 0",
            eta[0], eta[1]
        ),
    }
}

/// `max |∇_{(H,r)}(η·ξ − log r)|` over the given half-plane points.
pub fn ricci_numeric_check(chart: &Chart, eta: [f64; 2], points: &[HalfPlanePoint]) -> f64 {
    points
        .iter()
        .map(|&p| {
            let j = chart.jet(p);
            let gh = eta[0] * j.dxi[0][0] + eta[1] * j.dxi[1][0];
            let gr = eta[0] * j.dxi[0][1] + eta[1] * j.dxi[1][1] - 1.0 / p.r;
            gh.hypot(gr)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AsymptoticModel {
    Euclidean,
    TaubNUT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VSample {
    /// Angle from the positive `H` axis, in degrees.
    pub angle: f64,
    pub rho: f64,
    pub v: f64,
    pub v_model: f64,
    /// First-order term from the spread of the `a_i`, see [`v_moment_term`].
    pub v_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub model: AsymptoticModel,
    pub samples: Vec<VSample>,
    /// `ρ²|V − V_model|` per sample.
    pub scaled_residuals: Vec<f64>,
    /// `ρ²|V − V_model − V_moment|` per sample.
    pub corrected_residuals: Vec<f64>,
    /// Every direction passes [`decade_bounded`] on `corrected_residuals`.
    pub bounded: bool,
    /// The same test applied to `scaled_residuals`.
    pub model_bounded: bool,
    pub min_v: f64,
}

const ASYMPTOTIC_FLOOR: f64 = 1e-6;

/// Model potential at `(H, r)`. For `H < 0` it uses the reflection
/// `(H, r) ↦ (−H, r)` with the normals reversed.
pub fn v_model(polygon: &MomentPolygon, nu: NutParameter, p: HalfPlanePoint) -> f64 {
    let n1 = polygon.first_normal().to_f64();
    let nd = polygon.last_normal().to_f64();
    let rho = p.rho();
    let euclid = det2(nd, n1) / (2.0 * rho);
    if nu.is_zero() {
        return euclid;
    }
    let nu = nu.as_array();
    let (near, far, t) = if p.h >= 0.0 { (n1, nd, p.h) } else { (nd, n1, -p.h) };
    let q = p.r * p.r / (2.0 * rho * (t + rho));
    det2(nu, near) * (1.0 - q) + det2(nu, far) * q + euclid
}

/// `−det(ν, m) r² / (2ρ³)` with `m = Σ a_i (ν_{i+1} − ν_i)`.
///
/// Expanding `r²/(2ρ_i(H_i + ρ_i))` about `a_i = 0` gives this `O(1/ρ)` term;
/// [`v_model`] omits it, so `V − v_model` is only `O(1/ρ²)` when
/// `det(ν, m) = 0`.
pub fn v_moment_term(chart: &Chart, p: HalfPlanePoint) -> f64 {
    let normals = chart.polygon().normals();
    let mut m = [0.0, 0.0];
    for (i, a) in chart.a().iter().enumerate() {
        let jump = normals[i + 1].sub(&normals[i]).to_f64();
        m[0] += a * jump[0];
        m[1] += a * jump[1];
    }
    let rho = p.rho();
    -det2(chart.nu().as_array(), m) * p.r * p.r / (2.0 * rho * rho * rho)
}

/// Last value ≤ 3× the largest earlier one. Comparing against every earlier
/// decade rather than only the first keeps a ray that starts near a zero of
/// the leading coefficient from reading as growth.
pub fn decade_bounded(ray: &[f64]) -> bool {
    match ray.split_last() {
        Some((last, earlier)) if !earlier.is_empty() => {
            let reference = earlier.iter().copied().fold(0.0, f64::max);
            last.is_finite() && *last <= 3.0 * reference + ASYMPTOTIC_FLOOR
        }
        _ => true,
    }
}

/// Compares `V` with its model along rays at the given angles (degrees,
/// measured from the positive `H` axis) for each `ρ`.
pub fn asymptotic_v(chart: &Chart, angles: &[f64], rhos: &[f64]) -> Result<AsymptoticReport> {
    if !chart.polygon().classify().strictly_unbounded {
        return Err(Error::NotStrictlyUnbounded);
    }
    let nu = chart.nu();
    let n = angles.len() * rhos.len();
    let mut samples = Vec::with_capacity(n);
    let mut scaled = Vec::with_capacity(n);
    let mut corrected = Vec::with_capacity(n);
    let mut bounded = true;
    let mut model_bounded = true;
    for &angle in angles {
        let (s, c) = angle.to_radians().sin_cos();
        let mut ray = Vec::with_capacity(rhos.len());
        let mut ray_corrected = Vec::with_capacity(rhos.len());
        for &rho in rhos {
            let p = HalfPlanePoint::new(rho * c, rho * s);
            let v = chart.jet(p).v;
            let v_model = v_model(chart.polygon(), nu, p);
            let v_moment = v_moment_term(chart, p);
            samples.push(VSample {
                angle,
                rho,
                v,
                v_model,
                v_moment,
            });
            ray.push(rho * rho * (v - v_model).abs());
            ray_corrected.push(rho * rho * (v - v_model - v_moment).abs());
        }
        model_bounded &= decade_bounded(&ray);
        bounded &= decade_bounded(&ray_corrected);
        scaled.extend(ray);
        corrected.extend(ray_corrected);
    }
    let min_v = samples.iter().map(|s| s.v).fold(f64::INFINITY, f64::min);
    Ok(AsymptoticReport {
        model: if nu.is_zero() {
            AsymptoticModel::Euclidean
        } else {
            AsymptoticModel::TaubNUT
        },
        samples,
        scaled_residuals: scaled,
        corrected_residuals: corrected,
        bounded,
        model_bounded,
        min_v,
    })
}

/// `vᵀ Hess(u)⁻¹ v` at `(H, r)` for each `r`.
pub fn killing_norm(chart: &Chart, v: [f64; 2], h: f64, radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| {
            let hi = hessian_from_jet(&chart.jet(HalfPlanePoint::new(h, r)), r).hess_inv;
            v[0] * (hi[0][0] * v[0] + hi[0][1] * v[1]) + v[1] * (hi[1][0] * v[0] + hi[1][1] * v[1])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiRangeReport {
    /// Mean large-`r` slope of `ξ` against `log r`.
    pub drift: [f64; 2],
    /// `½(ν_1 + ν_d)`.
    pub expected: [f64; 2],
    pub complete: bool,
    pub strictly_unbounded: bool,
}

/// Estimates `dξ/d log r` between the two largest radii, averaged over `H`.
///
/// The drift of a strictly unbounded polygon is a nonzero half-integer
/// vector, so `complete` thresholds its length at `1/4`.
pub fn xi_range_probe(chart: &Chart, radii: &[f64], hs: &[f64]) -> XiRangeReport {
    let n1 = chart.polygon().first_normal().to_f64();
    let nd = chart.polygon().last_normal().to_f64();
    let expected = [0.5 * (n1[0] + nd[0]), 0.5 * (n1[1] + nd[1])];
    let mut drift = [0.0; 2];
    let k = radii.len();
    if k >= 2 && !hs.is_empty() {
        let (r0, r1) = (radii[k - 2], radii[k - 1]);
        for &h in hs {
            let a = chart.xi(HalfPlanePoint::new(h, r0));
            let b = chart.xi(HalfPlanePoint::new(h, r1));
            let dl = r1.ln() - r0.ln();
            drift[0] += (b[0] - a[0]) / dl;
            drift[1] += (b[1] - a[1]) / dl;
        }
        drift[0] /= hs.len() as f64;
        drift[1] /= hs.len() as f64;
    }
    XiRangeReport {
        drift,
        expected,
        complete: drift[0].hypot(drift[1]) > 0.25,
        strictly_unbounded: chart.polygon().classify().strictly_unbounded,
    }
}
