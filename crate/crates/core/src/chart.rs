//! The chart `(H, r) ↦ x` of action coordinates and its numerical inverse.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{HalfPlanePoint, NutParameter, XiField, XiJet};
use crate::polygon::{det2, MomentPolygon};

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-10;
const CONTINUATION_STEPS: usize = 8;

/// Which determinant column the `a`-system uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reading {
    Next,
    Same,
}

/// Solves the triangular system for `a_1 < … < a_{d−1}`:
/// `Σ_{i ≤ j} a_i det(ν_{i+1} − ν_i, ν_{j+1}) = λ_{j+1}`.
///
/// The alternative column `ν_j` is tried if the first reading fails to
/// reproduce the polygon's vertices under the boundary map.
pub fn solve_a(polygon: &MomentPolygon) -> Result<Vec<f64>> {
    let mut diagnostics = Vec::new();
    for reading in [Reading::Next, Reading::Same] {
        let a = forward_substitute(polygon, reading);
        check_monotone(&a)?;
        match verify_boundary_map(polygon, &a) {
            Ok(()) => return Ok(a),
            Err(msg) => diagnostics.push(format!("{reading:?} reading: {msg}")),
        }
    }
    Err(Error::BoundaryMapMismatch(diagnostics.join("; ")))
}

fn forward_substitute(polygon: &MomentPolygon, reading: Reading) -> Vec<f64> {
    let n = polygon.normals();
    let lambda = polygon.offsets();
    let d = polygon.d();
    let mut a: Vec<f64> = Vec::with_capacity(d - 1);
    for j in 0..d - 1 {
        let col = match reading {
            Reading::Next => n[j + 1],
            Reading::Same => n[j],
        };
        let mut rhs = lambda[j + 1];
        for (i, ai) in a.iter().enumerate() {
            rhs -= ai * n[i + 1].sub(&n[i]).det(&col) as f64;
        }
        // Unit diagonal: det(ν_{j+1} − ν_j, ν_{j+1}) = det(ν_{j+1} − ν_j, ν_j) = 1.
        a.push(rhs);
    }
    a
}

fn check_monotone(a: &[f64]) -> Result<()> {
    for j in 1..a.len() {
        if !(a[j] > a[j - 1]) {
            return Err(Error::NonMonotoneA {
                index: j + 1,
                value: a[j],
                previous: a[j - 1],
            });
        }
    }
    Ok(())
}

fn verify_boundary_map(polygon: &MomentPolygon, a: &[f64]) -> std::result::Result<(), String> {
    let field = XiField::new_unchecked(polygon, NutParameter::ZERO, a);
    let d = polygon.d();
    let scale = 1.0 + a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for j in 1..d {
        let x = field.action_coords(HalfPlanePoint::new(-a[j - 1], 0.0));
        let v = polygon.vertex(j);
        let err = (x[0] - v[0]).abs().max((x[1] - v[1]).abs());
        if err > 1e-9 * scale * (1.0 + v[0].abs().max(v[1].abs())) {
            return Err(format!(
                "x(-a_{j}, 0) = ({}, {}) but vertex {j} = ({}, {})",
                x[0], x[1], v[0], v[1]
            ));
        }
    }
    let probes = [(-a[0] + 1.0, 0), (-a[d - 2] - 1.0, d - 1)];
    for (h, k) in probes {
        let x = field.action_coords(HalfPlanePoint::new(h, 0.0));
        let l = polygon.ell(k, x);
        if l.abs() > 1e-9 * scale {
            return Err(format!("unbounded edge {} misses x({h}, 0) (l = {l})", k + 1));
        }
    }
    Ok(())
}

/// Image of a boundary point `(H, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryImage {
    /// 1-based edge labels; two entries at a vertex.
    pub edges: Vec<usize>,
    pub x: [f64; 2],
}

/// Solved chart for a polygon and nut parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    polygon: MomentPolygon,
    nu: NutParameter,
    a: Vec<f64>,
    field: XiField,
    anchor: HalfPlanePoint,
}

impl Chart {
    pub fn new(polygon: MomentPolygon, nu: NutParameter) -> Result<Self> {
        nu.check_admissible(&polygon)?;
        let a = solve_a(&polygon)?;
        let field = XiField::new(&polygon, nu, &a)?;
        let mut chart = Self {
            polygon,
            nu,
            a,
            field,
            anchor: HalfPlanePoint::new(0.0, 1.0),
        };
        chart.anchor = chart.choose_anchor();
        Ok(chart)
    }

    /// Same polygon with another nut parameter.
    pub fn with_nu(&self, nu: NutParameter) -> Result<Self> {
        Self::new(self.polygon.clone(), nu)
    }

    pub fn polygon(&self) -> &MomentPolygon {
        &self.polygon
    }

    pub fn nu(&self) -> NutParameter {
        self.nu
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn field(&self) -> &XiField {
        &self.field
    }

    pub fn anchor(&self) -> HalfPlanePoint {
        self.anchor
    }

    pub fn jet(&self, p: HalfPlanePoint) -> XiJet {
        self.field.jet(p)
    }

    pub fn xi(&self, p: HalfPlanePoint) -> [f64; 2] {
        self.field.xi(p)
    }

    pub fn action_coords(&self, p: HalfPlanePoint) -> [f64; 2] {
        self.field.action_coords(p)
    }

    /// `∂x/∂(H, r) = [[rξ_{2,r}, −rξ_{2,H}], [−rξ_{1,r}, rξ_{1,H}]]`.
    pub fn jacobian(&self, p: HalfPlanePoint) -> [[f64; 2]; 2] {
        self.field.eval(p).2
    }

    /// `x(H, 0)` together with the edge(s) it lies on.
    pub fn boundary_image(&self, h: f64) -> BoundaryImage {
        let x = self.field.action_coords(HalfPlanePoint::new(h, 0.0));
        // Edge j + 1 for −a_{j+1} < H < −a_j; edge 1 right of −a_1.
        let mut edges = Vec::with_capacity(2);
        match self.a.iter().position(|&aj| h >= -aj) {
            Some(j) if h == -self.a[j] => edges.extend([j + 1, j + 2]),
            Some(j) => edges.push(j + 1),
            None => edges.push(self.polygon.d()),
        }
        BoundaryImage { edges, x }
    }

    /// Half-plane preimage of an interior point `x`.
    pub fn invert(&self, x: [f64; 2], hint: Option<HalfPlanePoint>) -> Result<HalfPlanePoint> {
        if !self.polygon.is_interior(x) {
            return Err(Error::PointNotInterior(x[0], x[1]));
        }
        if let Some(h) = hint.filter(|h| h.r > 0.0 && h.h.is_finite() && h.r.is_finite()) {
            if let Ok(p) = newton(&self.field, x, h) {
                return Ok(p);
            }
        }
        if self.nu.is_zero() {
            return self.invert_flat_nu(&self.field, x);
        }
        let base = self.field.with_nu(NutParameter::ZERO);
        let mut p = self.invert_flat_nu(&base, x)?;
        for k in 1..=CONTINUATION_STEPS {
            let t = k as f64 / CONTINUATION_STEPS as f64;
            let step = self.field.with_nu(self.nu.scaled(t));
            p = newton(&step, x, p)?;
        }
        Ok(p)
    }

    fn invert_flat_nu(&self, field: &XiField, x: [f64; 2]) -> Result<HalfPlanePoint> {
        let mut last = None;
        for seed in self.seeds(field, x) {
            match newton(field, x, seed) {
                Ok(p) => return Ok(p),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or(Error::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
            x1: x[0],
            x2: x[1],
        }))
    }

    /// Two-term model seed followed by the best of a coarse candidate grid.
    fn seeds(&self, field: &XiField, x: [f64; 2]) -> Vec<HalfPlanePoint> {
        let mut seeds = Vec::new();
        if let Some(p) = two_term_seed(&self.polygon, x) {
            seeds.push(p);
        }
        let lo = -self.a[self.a.len() - 1];
        let hi = -self.a[0];
        let span = 1.0 + (hi - lo) + x[0].abs() + x[1].abs();
        let mut candidates = Vec::new();
        for i in 0..=8 {
            let h = lo - span + 2.0 * (span + (hi - lo) / 2.0) * i as f64 / 8.0;
            for r in [1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0] {
                candidates.push(HalfPlanePoint::new(h, r * span));
            }
        }
        let dist = |p: &HalfPlanePoint| {
            let y = field.action_coords(*p);
            (y[0] - x[0]).hypot(y[1] - x[1])
        };
        candidates.sort_by(|p, q| dist(p).total_cmp(&dist(q)));
        seeds.extend(candidates.into_iter().take(4));
        seeds
    }

    fn choose_anchor(&self) -> HalfPlanePoint {
        let mut proxy = self.polygon.vertex(1);
        for n in self.polygon.normals() {
            let v = n.to_f64();
            let norm = v[0].hypot(v[1]);
            proxy[0] += v[0] / norm;
            proxy[1] += v[1] / norm;
        }
        let fallback = HalfPlanePoint::new(-(self.a[0] + self.a[self.a.len() - 1]) / 2.0, 1.0);
        if self.polygon.min_edge_value(proxy) > 1e-9 {
            if let Ok(p) = self.invert(proxy, None) {
                return p;
            }
        }
        fallback
    }

    /// Image of the anchor in action coordinates.
    pub fn anchor_x(&self) -> [f64; 2] {
        self.action_coords(self.anchor)
    }
}

/// Approximates the chart by the first and last log terms with `a = 0`:
/// `x ≈ H (β_1, −α_1) + s (β_1 − β_d, α_d − α_1)`, `s = (ρ − H)/2`.
fn two_term_seed(polygon: &MomentPolygon, x: [f64; 2]) -> Option<HalfPlanePoint> {
    let n1 = polygon.first_normal().to_f64();
    let nd = polygon.last_normal().to_f64();
    let e = [n1[1], -n1[0]];
    let w = [n1[1] - nd[1], nd[0] - n1[0]];
    let det = det2(e, w);
    if det == 0.0 {
        return None;
    }
    let h = det2(x, w) / det;
    let s = det2(e, x) / det;
    let floor = 1e-6 * (1.0 + h.abs());
    let s = s.max(floor);
    let sh = (s + h).max(floor);
    let r = 2.0 * (s * sh).sqrt();
    (h.is_finite() && r.is_finite() && r > 0.0).then(|| HalfPlanePoint::new(h, r))
}

/// Damped Newton on `x(H, r) = target` with the closed-form jacobian.
fn newton(field: &XiField, target: [f64; 2], seed: HalfPlanePoint) -> Result<HalfPlanePoint> {
    let tol = NEWTON_TOL * (1.0 + target[0].hypot(target[1]));
    let residual = |p: HalfPlanePoint| {
        let y = field.action_coords(p);
        [y[0] - target[0], y[1] - target[1]]
    };
    let mut p = seed;
    let (_, y, mut jac) = field.eval(p);
    let mut f = [y[0] - target[0], y[1] - target[1]];
    let mut norm = f[0].hypot(f[1]);
    let mut converged_at = None;
    for iter in 0..NEWTON_MAX_ITER {
        if norm <= tol && converged_at.is_none() {
            converged_at = Some(iter);
        }
        if let Some(c) = converged_at {
            // A few polishing steps past the tolerance, stopping once they stop helping.
            if iter >= c + 3 || norm == 0.0 {
                break;
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            break;
        }
        let dh = -(jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
        let dr = -(-jac[1][0] * f[0] + jac[0][0] * f[1]) / det;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let q = HalfPlanePoint::new(p.h + t * dh, p.r + t * dr);
            if q.r > 0.0 && q.h.is_finite() && q.r.is_finite() {
                let fq = residual(q);
                let nq = fq[0].hypot(fq[1]);
                if nq < norm * (1.0 - 1e-4 * t) || (converged_at.is_some() && nq < norm) {
                    accepted = Some(q);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(q) = accepted else { break };
        p = q;
        let (_, y, j) = field.eval(p);
        jac = j;
        f = [y[0] - target[0], y[1] - target[1]];
        norm = f[0].hypot(f[1]);
    }
    if norm <= tol {
        Ok(p)
    } else {
        Err(Error::NoConvergence {
            iterations: NEWTON_MAX_ITER,
            residual: norm,
            x1: target[0],
            x2: target[1],
        })
    }
}
