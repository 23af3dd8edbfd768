//! The symplectic potential `u` with `du = ξ_1 dx_1 + ξ_2 dx_2`, and the
//! metric data `Hess(u)`, `Hess(u)⁻¹` in closed form.

use std::io::Write;

use serde::Serialize;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::harmonic::{HalfPlanePoint, XiJet};
use crate::quadrature::{integrate, DEFAULT_TOLERANCE, MAX_SUBDIVISIONS};

pub type Sym2 = [[f64; 2]; 2];

/// `Hess(u)`, its inverse and determinant at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hessian {
    pub hess: Sym2,
    pub hess_inv: Sym2,
    pub det_hess: f64,
}

/// Metric data at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSample {
    pub x: [f64; 2],
    pub hr: HalfPlanePoint,
    pub u: f64,
    pub hess: Sym2,
    pub hess_inv: Sym2,
    pub det_hess: f64,
    pub v: f64,
}

impl MetricSample {
    pub fn is_positive_definite(&self) -> bool {
        self.hess[0][0] > 0.0 && self.hess[0][0] * self.hess[1][1] - self.hess[0][1] * self.hess[1][0] > 0.0
    }
}

/// `u(p) − u(anchor)` by adaptive quadrature along the segment anchor → `p`.
pub fn potential_value(chart: &Chart, p: HalfPlanePoint) -> Result<f64> {
    potential_along(chart, &[chart.anchor(), p])
}

/// `u` at the last vertex of a polyline starting at the anchor gauge.
///
/// The integrand on each segment is `ξ · (∂x/∂(H, r)) · Δ`.
pub fn potential_along(chart: &Chart, path: &[HalfPlanePoint]) -> Result<f64> {
    if let Some(bad) = path.iter().find(|q| !(q.r > 0.0)) {
        return Err(Error::NonPositiveRadius(bad.r));
    }
    let base = if path.first() == Some(&chart.anchor()) {
        0.0
    } else {
        let start = path.first().copied().unwrap_or(chart.anchor());
        segment_integral(chart, chart.anchor(), start)?
    };
    path.windows(2)
        .try_fold(base, |acc, w| Ok(acc + segment_integral(chart, w[0], w[1])?))
}

fn segment_integral(chart: &Chart, p: HalfPlanePoint, q: HalfPlanePoint) -> Result<f64> {
    let (dh, dr) = (q.h - p.h, q.r - p.r);
    if dh == 0.0 && dr == 0.0 {
        return Ok(0.0);
    }
    let field = chart.field();
    let integrand = |t: f64| {
        let z = HalfPlanePoint::new(p.h + t * dh, p.r + t * dr);
        let (jet, _, j) = field.eval(z);
        let dx1 = j[0][0] * dh + j[0][1] * dr;
        let dx2 = j[1][0] * dh + j[1][1] * dr;
        jet.xi[0] * dx1 + jet.xi[1] * dx2
    };
    Ok(integrate(integrand, 0.0, 1.0, DEFAULT_TOLERANCE, MAX_SUBDIVISIONS)?.value)
}

/// Closed-form metric matrices from a jet:
/// `Hess = M / V` and `Hess⁻¹ = r² adj(M) / V` with `M_{kl} = ∇ξ_k · ∇ξ_l`.
pub fn hessian_from_jet(jet: &XiJet, r: f64) -> Hessian {
    let g1 = jet.dxi[0];
    let g2 = jet.dxi[1];
    let m11 = g1[0] * g1[0] + g1[1] * g1[1];
    let m12 = g1[0] * g2[0] + g1[1] * g2[1];
    let m22 = g2[0] * g2[0] + g2[1] * g2[1];
    let inv_v = 1.0 / jet.v;
    let s = r * r * inv_v;
    Hessian {
        hess: [[m11 * inv_v, m12 * inv_v], [m12 * inv_v, m22 * inv_v]],
        hess_inv: [[m22 * s, -m12 * s], [-m12 * s, m11 * s]],
        det_hess: 1.0 / (r * r),
    }
}

pub fn hessian(chart: &Chart, p: HalfPlanePoint) -> Result<Hessian> {
    if !(p.r > 0.0) {
        return Err(Error::NonPositiveRadius(p.r));
    }
    Ok(hessian_from_jet(&chart.jet(p), p.r))
}

pub fn det2x2(m: &Sym2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn sample(chart: &Chart, p: HalfPlanePoint) -> Result<MetricSample> {
    let u = potential_value(chart, p)?;
    let jet = chart.jet(p);
    let h = hessian_from_jet(&jet, p.r);
    Ok(MetricSample {
        x: chart.action_coords(p),
        hr: p,
        u,
        hess: h.hess,
        hess_inv: h.hess_inv,
        det_hess: det2x2(&h.hess),
        v: jet.v,
    })
}

/// Samples on a tensor grid in `(H, r)`, ordered with `r` varying fastest.
pub fn sample_grid(
    chart: &Chart,
    h_range: (f64, f64),
    r_range: (f64, f64),
    n_h: usize,
    n_r: usize,
    exec: Execution,
) -> Result<Vec<MetricSample>> {
    let points = grid_points(h_range, r_range, n_h, n_r);
    exec::try_map(exec, &points, |p| sample(chart, *p))
}

/// Tensor grid of half-plane points, `r` varying fastest.
pub fn grid_points(h_range: (f64, f64), r_range: (f64, f64), n_h: usize, n_r: usize) -> Vec<HalfPlanePoint> {
    let lin = |(lo, hi): (f64, f64), n: usize, k: usize| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let mut points = Vec::with_capacity(n_h * n_r);
    for i in 0..n_h {
        for j in 0..n_r {
            points.push(HalfPlanePoint::new(lin(h_range, n_h, i), lin(r_range, n_r, j)));
        }
    }
    points
}

pub const CSV_HEADER: [&str; 10] = ["H", "r", "x1", "x2", "u", "h11", "h12", "h22", "det", "V"];

/// Writes samples as CSV with shortest round-trip decimal formatting.
pub fn write_csv<W: Write>(samples: &[MetricSample], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in samples {
        let row = [
            s.hr.h,
            s.hr.r,
            s.x[0],
            s.x[1],
            s.u,
            s.hess[0][0],
            s.hess[0][1],
            s.hess[1][1],
            s.det_hess,
            s.v,
        ];
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Which part of the boundary a regularity probe approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTarget {
    /// Interior of edge `E_j` (1-based).
    Edge(usize),
    /// Vertex `E_j ∩ E_{j+1}` (1-based).
    Vertex(usize),
}

/// One radius of a boundary approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryProbe {
    pub r: f64,
    pub x: [f64; 2],
    /// `u − u_P`, with `u_P` the Guillemin potential.
    pub u_minus_guillemin: f64,
    /// `|ξ − ∇u_P|`.
    pub gradient_gap: f64,
    /// `r² / Π ℓ_i(x)`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub target: BoundaryTarget,
    pub h: f64,
    pub probes: Vec<BoundaryProbe>,
    pub sup_u_minus_guillemin: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub bounded: bool,
    pub delta_bracketed: bool,
}

impl BoundaryReport {
    pub fn passed(&self) -> bool {
        self.bounded && self.delta_bracketed
    }
}

/// Approaches the interior of an edge (or a vertex) along `H = const`,
/// `r → 0`, and reports whether `u − u_P` and its gradient stay bounded
/// and whether `r² / Π ℓ_i` stays in a positive bracket.
///
/// "Bounded" means the last value is within 3× the first plus 1;
/// "bracketed" means `δ > 0` with `max δ / min δ ≤ 3`.
pub fn boundary_regularity(chart: &Chart, target: BoundaryTarget, radii: &[f64]) -> Result<BoundaryReport> {
    let a = chart.a();
    let d = chart.polygon().d();
    let h = match target {
        BoundaryTarget::Edge(j) if j == 0 || j > d => return Err(Error::EdgeIndexOutOfRange { index: j, d }),
        BoundaryTarget::Vertex(j) if j == 0 || j >= d => return Err(Error::EdgeIndexOutOfRange { index: j, d }),
        BoundaryTarget::Edge(1) => -a[0] + 1.0,
        BoundaryTarget::Edge(j) if j == d => -a[d - 2] - 1.0,
        BoundaryTarget::Edge(j) => -0.5 * (a[j - 2] + a[j - 1]),
        BoundaryTarget::Vertex(j) => -a[j - 1],
    };
    let polygon = chart.polygon();
    let mut probes = Vec::with_capacity(radii.len());
    for &r in radii {
        let p = HalfPlanePoint::new(h, r);
        let x = chart.action_coords(p);
        let u = potential_value(chart, p)?;
        let up = polygon.guillemin_potential(x)?;
        let xi = chart.xi(p);
        let mut grad = [0.0; 2];
        let mut prod = 1.0;
        for (k, n) in polygon.normals().iter().enumerate() {
            let l = polygon.edge_function(k + 1, x)?;
            let n = n.to_f64();
            let g = 0.5 * (l.ln() + 1.0);
            grad[0] += n[0] * g;
            grad[1] += n[1] * g;
            prod *= l;
        }
        probes.push(BoundaryProbe {
            r,
            x,
            u_minus_guillemin: u - up,
            gradient_gap: (xi[0] - grad[0]).hypot(xi[1] - grad[1]),
            delta: r * r / prod,
        });
    }
    let sup_u = probes.iter().map(|p| p.u_minus_guillemin.abs()).fold(0.0, f64::max);
    let delta_min = probes.iter().map(|p| p.delta).fold(f64::INFINITY, f64::min);
    let delta_max = probes.iter().map(|p| p.delta).fold(0.0, f64::max);
    let within = |f: fn(&BoundaryProbe) -> f64| match (probes.first(), probes.last()) {
        (Some(first), Some(last)) => f(last).is_finite() && f(last).abs() <= 3.0 * f(first).abs() + 1.0,
        _ => true,
    };
    let bounded = within(|p| p.u_minus_guillemin) && within(|p| p.gradient_gap);
    let delta_bracketed = delta_min > 0.0 && delta_max <= 3.0 * delta_min;
    Ok(BoundaryReport {
        target,
        h,
        probes,
        sup_u_minus_guillemin: sup_u,
        delta_min,
        delta_max,
        bounded,
        delta_bracketed,
    })
}
