//! Axisymmetric harmonic functions on the half-plane `{(H, r) : r > 0}` and
//! the pair `ξ = (ξ_1, ξ_2)` assembled from them.
//!
//! Every building block solves `f_HH + f_rr + f_r / r = 0`:
//! affine functions of `H`, `log r`, and the log branches
//! `½ log(±(H + a) + √((H + a)² + r²))`.
//!
//! All per-point quantities go through [`Branch`], which evaluates
//! `H_i + ρ_i` and `ρ_i − H_i` without cancellation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polygon::{det2, MomentPolygon};

/// A point `(H, r)` of the closed half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlanePoint {
    pub h: f64,
    pub r: f64,
}

impl HalfPlanePoint {
    pub const fn new(h: f64, r: f64) -> Self {
        Self { h, r }
    }

    pub fn rho(&self) -> f64 {
        self.h.hypot(self.r)
    }
}

/// The nut vector `ν = (α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, serde::Deserialize)]
pub struct NutParameter {
    pub alpha: f64,
    pub beta: f64,
}

impl NutParameter {
    pub const ZERO: NutParameter = NutParameter { alpha: 0.0, beta: 0.0 };

    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.alpha, self.beta]
    }

    pub fn is_zero(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::new(self.alpha * t, self.beta * t)
    }

    /// `(det(ν, ν_1), det(ν, ν_d))`.
    pub fn cone_dets(&self, polygon: &MomentPolygon) -> (f64, f64) {
        let nu = self.as_array();
        (
            det2(nu, polygon.first_normal().to_f64()),
            det2(nu, polygon.last_normal().to_f64()),
        )
    }

    pub fn is_admissible(&self, polygon: &MomentPolygon) -> bool {
        let (first, last) = self.cone_dets(polygon);
        first >= 0.0 && last >= 0.0
    }

    /// ALE (`ν = 0`) or strictly inside the cone.
    pub fn is_interior(&self, polygon: &MomentPolygon) -> bool {
        let (first, last) = self.cone_dets(polygon);
        self.is_zero() || (first > 0.0 && last > 0.0)
    }

    pub fn check_admissible(&self, polygon: &MomentPolygon) -> Result<()> {
        let (det_first, det_last) = self.cone_dets(polygon);
        if det_first >= 0.0 && det_last >= 0.0 {
            Ok(())
        } else {
            Err(Error::InadmissibleNut {
                alpha: self.alpha,
                beta: self.beta,
                det_first,
                det_last,
            })
        }
    }
}

/// Stable evaluation of `ρ = √(t² + r²)`, `t + ρ` and `ρ − t`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Branch {
    pub rho: f64,
    pub plus: f64,
    pub minus: f64,
    t: f64,
    r: f64,
}

impl Branch {
    #[inline]
    pub fn new(t: f64, r: f64) -> Self {
        let rho = t.hypot(r);
        let (plus, minus) = if t >= 0.0 {
            let plus = t + rho;
            let minus = if plus > 0.0 { r * (r / plus) } else { 0.0 };
            (plus, minus)
        } else {
            let minus = rho - t;
            (r * (r / minus), minus)
        };
        Self { rho, plus, minus, t, r }
    }

    /// `½ log(t + ρ)`; for `t < 0` uses `log r − ½ log(ρ − t)`.
    #[inline]
    pub fn half_log_plus(&self) -> f64 {
        if self.t >= 0.0 {
            0.5 * self.plus.ln()
        } else {
            self.r.ln() - 0.5 * self.minus.ln()
        }
    }

    /// `r² / (2ρ(t + ρ))`, i.e. `r · ∂_r ½log(t + ρ)`; finite at `r = 0`.
    #[inline]
    pub fn r_dr(&self) -> f64 {
        if self.t >= 0.0 {
            if self.plus > 0.0 {
                self.r * self.r / (2.0 * self.rho * self.plus)
            } else {
                0.5
            }
        } else {
            self.minus / (2.0 * self.rho)
        }
    }
}

/// `½ log(H + a + √((H + a)² + r²))`.
pub fn log_solution(a: f64, p: HalfPlanePoint) -> Result<f64> {
    let t = p.h + a;
    if p.r < 0.0 || (p.r == 0.0 && t <= 0.0) || !t.is_finite() {
        return Err(Error::Domain { shifted: t, r: p.r });
    }
    Ok(Branch::new(t, p.r).half_log_plus())
}

/// `½ log(−(H + a) + √((H + a)² + r²))`, the reflected branch.
pub fn log_solution_reflected(a: f64, p: HalfPlanePoint) -> Result<f64> {
    let t = p.h + a;
    if p.r < 0.0 || (p.r == 0.0 && t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain { shifted: t, r: p.r });
    }
    Ok(Branch::new(-t, p.r).half_log_plus())
}

/// `f_HH + f_rr + f_r / r`.
pub fn pde_residual(f_hh: f64, f_rr: f64, f_r: f64, r: f64) -> f64 {
    f_hh + f_rr + f_r / r
}

/// [`pde_residual`] with central-difference partials of step `h`.
pub fn fd_pde_residual<F>(f: F, p: HalfPlanePoint, h: f64) -> f64
where
    F: Fn(HalfPlanePoint) -> f64,
{
    let f0 = f(p);
    fd_pde_residual_increments(|q| f(q) - f0, p, h)
}

/// [`fd_pde_residual`] from increments `df(q) = f(q) − f(p)`, which lets
/// callers supply increments free of cancellation.
pub fn fd_pde_residual_increments<F>(df: F, p: HalfPlanePoint, h: f64) -> f64
where
    F: Fn(HalfPlanePoint) -> f64,
{
    let (hh, r) = (p.h, p.r);
    let d_hp = df(HalfPlanePoint::new(hh + h, r));
    let d_hm = df(HalfPlanePoint::new(hh - h, r));
    let d_rp = df(HalfPlanePoint::new(hh, r + h));
    let d_rm = df(HalfPlanePoint::new(hh, r - h));
    let f_hh = (d_hp + d_hm) / (h * h);
    let f_rr = (d_rp + d_rm) / (h * h);
    let f_r = (d_rp - d_rm) / (2.0 * h);
    pde_residual(f_hh, f_rr, f_r, r)
}

/// Values and first partials of `ξ` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiJet {
    pub xi: [f64; 2],
    /// Row `k` is `[∂ξ_k/∂H, ∂ξ_k/∂r]`.
    pub dxi: [[f64; 2]; 2],
    pub det: f64,
    /// Conformal factor `V = r · det Dξ`.
    pub v: f64,
}

/// The harmonic pair `ξ` for a polygon, nut vector and vertex parameters `a`.
///
/// ```text
/// ξ = ν_1 log r + ½ Σ_i (ν_{i+1} − ν_i) log(H + a_i + ρ_i) + ν H
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct XiField {
    normals: Vec<[f64; 2]>,
    jumps: Vec<[f64; 2]>,
    a: Vec<f64>,
    nu: [f64; 2],
}

impl XiField {
    pub fn new(polygon: &MomentPolygon, nu: NutParameter, a: &[f64]) -> Result<Self> {
        nu.check_admissible(polygon)?;
        if a.len() + 1 != polygon.d() {
            return Err(Error::NonIncreasingA {
                index: a.len(),
                value: f64::NAN,
            });
        }
        for i in 1..a.len() {
            if !(a[i] > a[i - 1]) {
                return Err(Error::NonIncreasingA {
                    index: i + 1,
                    value: a[i],
                });
            }
        }
        Ok(Self::new_unchecked(polygon, nu, a))
    }

    pub(crate) fn new_unchecked(polygon: &MomentPolygon, nu: NutParameter, a: &[f64]) -> Self {
        let normals: Vec<[f64; 2]> = polygon.normals().iter().map(|n| n.to_f64()).collect();
        let jumps = normals
            .windows(2)
            .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
            .collect();
        Self {
            normals,
            jumps,
            a: a.to_vec(),
            nu: nu.as_array(),
        }
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn nu(&self) -> NutParameter {
        NutParameter::new(self.nu[0], self.nu[1])
    }

    pub(crate) fn with_nu(&self, nu: NutParameter) -> Self {
        Self {
            nu: nu.as_array(),
            ..self.clone()
        }
    }

    pub fn xi(&self, p: HalfPlanePoint) -> [f64; 2] {
        let log_r = p.r.ln();
        let first = self.normals[0];
        let mut xi = [first[0] * log_r + self.nu[0] * p.h, first[1] * log_r + self.nu[1] * p.h];
        for (jump, a) in self.jumps.iter().zip(&self.a) {
            let l = Branch::new(p.h + a, p.r).half_log_plus();
            xi[0] += jump[0] * l;
            xi[1] += jump[1] * l;
        }
        xi
    }

    /// `ξ(q) − ξ(p)`, evaluated in difference form so that it stays accurate
    /// when `q` is close to `p`.
    pub fn xi_increment(&self, p: HalfPlanePoint, q: HalfPlanePoint) -> [f64; 2] {
        let dh = q.h - p.h;
        let dr = q.r - p.r;
        let dlog_r = (dr / p.r).ln_1p();
        let first = self.normals[0];
        let mut d = [first[0] * dlog_r + self.nu[0] * dh, first[1] * dlog_r + self.nu[1] * dh];
        for (jump, a) in self.jumps.iter().zip(&self.a) {
            let (tp, tq) = (p.h + a, q.h + a);
            let bp = Branch::new(tp, p.r);
            let rho_q = tq.hypot(q.r);
            let drho = (dh * (tq + tp) + dr * (q.r + p.r)) / (rho_q + bp.rho);
            let dl = if tp >= 0.0 {
                0.5 * ((dh + drho) / bp.plus).ln_1p()
            } else {
                dlog_r - 0.5 * ((drho - dh) / bp.minus).ln_1p()
            };
            d[0] += jump[0] * dl;
            d[1] += jump[1] * dl;
        }
        d
    }

    /// `ξ` together with `Dξ`, `det Dξ` and `V`.
    pub fn jet(&self, p: HalfPlanePoint) -> XiJet {
        self.eval(p).0
    }

    /// Action coordinates `x(H, r)`; defined for `r ≥ 0`.
    ///
    /// ```text
    /// x_1 =  β_1 H + ½ Σ Δβ_i (H_i − ρ_i) − β r²/2
    /// x_2 = −α_1 H − ½ Σ Δα_i (H_i − ρ_i) + α r²/2
    /// ```
    pub fn action_coords(&self, p: HalfPlanePoint) -> [f64; 2] {
        let first = self.normals[0];
        let r2 = p.r * p.r;
        let mut x = [
            first[1] * p.h - 0.5 * self.nu[1] * r2,
            -first[0] * p.h + 0.5 * self.nu[0] * r2,
        ];
        for (jump, a) in self.jumps.iter().zip(&self.a) {
            let m = Branch::new(p.h + a, p.r).minus;
            x[0] -= 0.5 * jump[1] * m;
            x[1] += 0.5 * jump[0] * m;
        }
        x
    }

    /// `(jet, x, ∂x/∂(H, r))` in a single pass. The jacobian is finite at `r = 0`.
    pub fn eval(&self, p: HalfPlanePoint) -> (XiJet, [f64; 2], [[f64; 2]; 2]) {
        let first = self.normals[0];
        let log_r = p.r.ln();
        let r2 = p.r * p.r;
        let mut xi = [first[0] * log_r + self.nu[0] * p.h, first[1] * log_r + self.nu[1] * p.h];
        let mut d_h = self.nu;
        // r · ∂ξ_k/∂r, finite up to r = 0.
        let mut r_dr = first;
        let mut x = [
            first[1] * p.h - 0.5 * self.nu[1] * r2,
            -first[0] * p.h + 0.5 * self.nu[0] * r2,
        ];
        for (jump, a) in self.jumps.iter().zip(&self.a) {
            let b = Branch::new(p.h + a, p.r);
            let l = if p.r > 0.0 { b.half_log_plus() } else { f64::NAN };
            let inv2rho = 0.5 / b.rho;
            let w = b.r_dr();
            for k in 0..2 {
                xi[k] += jump[k] * l;
                d_h[k] += jump[k] * inv2rho;
                r_dr[k] += jump[k] * w;
            }
            x[0] -= 0.5 * jump[1] * b.minus;
            x[1] += 0.5 * jump[0] * b.minus;
        }
        let d_r = [r_dr[0] / p.r, r_dr[1] / p.r];
        let dxi = [[d_h[0], d_r[0]], [d_h[1], d_r[1]]];
        let det = d_h[0] * d_r[1] - d_r[0] * d_h[1];
        // V = r det Dξ, formed from r·ξ_r to stay accurate for small r.
        let v = d_h[0] * r_dr[1] - r_dr[0] * d_h[1];
        let jac = [[r_dr[1], -p.r * d_h[1]], [-r_dr[0], p.r * d_h[0]]];
        (XiJet { xi, dxi, det, v }, x, jac)
    }

    /// Additive terms of `det Dξ(ν) − det Dξ(0)`, one per edge.
    ///
    /// With `q_i = r / (2ρ_i(H_i + ρ_i))` they are
    /// `det(ν,ν_1)(1/r − q_1)`, `det(ν,ν_i)(q_{i−1} − q_i)` for `1 < i < d`,
    /// and `det(ν,ν_d) q_{d−1}`. Each is nonnegative when `ν` is admissible.
    pub fn extra_det_terms(&self, p: HalfPlanePoint) -> Vec<f64> {
        let d = self.normals.len();
        let q: Vec<f64> = self.a.iter().map(|a| Branch::new(p.h + a, p.r).r_dr() / p.r).collect();
        let det_nu = |i: usize| det2(self.nu, self.normals[i]);
        let mut terms = Vec::with_capacity(d);
        terms.push(det_nu(0) * (1.0 / p.r - q[0]));
        for i in 1..d - 1 {
            terms.push(det_nu(i) * (q[i - 1] - q[i]));
        }
        terms.push(det_nu(d - 1) * q[d - 2]);
        terms
    }
}

/// Checked one-shot evaluation of `ξ` and its jet.
pub fn build_xi(polygon: &MomentPolygon, nu: NutParameter, a: &[f64], p: HalfPlanePoint) -> Result<XiJet> {
    if !(p.r > 0.0) {
        return Err(Error::NonPositiveRadius(p.r));
    }
    Ok(XiField::new(polygon, nu, a)?.jet(p))
}

/// Extra determinant terms plus whether `ν` was admissible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtraDetTerms {
    pub terms: Vec<f64>,
    pub admissible: bool,
}

impl ExtraDetTerms {
    pub fn all_nonnegative(&self) -> bool {
        self.terms.iter().all(|t| *t >= 0.0)
    }

    pub fn sum(&self) -> f64 {
        self.terms.iter().sum()
    }
}

/// Evaluates the determinant correction terms; inadmissible `ν` is reported
/// through the `admissible` flag rather than rejected.
pub fn extra_det_terms(
    polygon: &MomentPolygon,
    nu: NutParameter,
    a: &[f64],
    p: HalfPlanePoint,
) -> Result<ExtraDetTerms> {
    if !(p.r > 0.0) {
        return Err(Error::NonPositiveRadius(p.r));
    }
    let field = XiField::new(polygon, NutParameter::ZERO, a)?.with_nu(nu);
    Ok(ExtraDetTerms {
        terms: field.extra_det_terms(p),
        admissible: nu.is_admissible(polygon),
    })
}
