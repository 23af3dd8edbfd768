//! Closed-form symplectic potentials for specific polygon families, used as
//! ground truth for the generic chart/potential pipeline.
//!
//! Families, with `u, v ≥ 0`, `2u = H + ρ`, `2v = −H + ρ`:
//! - flat quadrant;
//! - `O(−p)`: normals `(0,1), (1,0), (p,−1)`, offsets `0, 0, a`;
//! - `A_p`: normals `(0,1), (1,0), (2,−1), …, (p,−(p−1))`, vertex parameters `a_2 < … < a_p`;
//! - `O(−2)` with nut parameter `(α, β)` in the scaling `2ξ = … + (α, β) H`;
//! - `S² × R²`: normals `(0,1), (1,0), (0,−1)`, offsets `0, 0, 2a`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::fd;
use crate::harmonic::{HalfPlanePoint, NutParameter};
use crate::polygon::MomentPolygon;

fn domain(msg: impl Into<String>) -> Error {
    Error::OracleDomain(msg.into())
}

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// `½(x_1 log 2x_1 + x_2 log 2x_2 − x_1 − x_2)`.
pub fn flat_potential(x: [f64; 2]) -> Result<f64> {
    if !(x[0] > 0.0 && x[1] > 0.0) {
        return Err(domain(format!("flat potential needs x1, x2 > 0, got {x:?}")));
    }
    Ok(0.5 * (x[0] * (2.0 * x[0]).ln() + x[1] * (2.0 * x[1]).ln() - x[0] - x[1]))
}

pub fn flat_gradient(x: [f64; 2]) -> Result<[f64; 2]> {
    flat_potential(x)?;
    Ok([0.5 * (2.0 * x[0]).ln(), 0.5 * (2.0 * x[1]).ln()])
}

fn op_check(p: u32, a: f64, x: [f64; 2]) -> Result<f64> {
    let pf = p as f64;
    let l3 = pf * x[0] - x[1] + a;
    if p == 0 || !(a > 0.0) || !(x[0] > 0.0 && x[1] > 0.0 && l3 > 0.0) {
        return Err(domain(format!("O(-{p}) with a = {a} is not defined at {x:?}")));
    }
    Ok(l3)
}

/// `O(−p)` potential:
/// `2u = x_1 log x_1 + x_2 log x_2 + ℓ_3 log ℓ_3 + (p−1)(x_1+a) log(x_1+a)
///       − (px_1+a) log(px_1+a) − px_1 + px_1 log 2`, `ℓ_3 = px_1 − x_2 + a`.
pub fn op_potential(p: u32, a: f64, x: [f64; 2]) -> Result<f64> {
    let l3 = op_check(p, a, x)?;
    let pf = p as f64;
    let two_u = xlogx(x[0]) + xlogx(x[1]) + xlogx(l3) + (pf - 1.0) * xlogx(x[0] + a) - xlogx(pf * x[0] + a) - pf * x[0]
        + pf * x[0] * 2f64.ln();
    Ok(0.5 * two_u)
}

pub fn op_gradient(p: u32, a: f64, x: [f64; 2]) -> Result<[f64; 2]> {
    let l3 = op_check(p, a, x)?;
    let pf = p as f64;
    Ok([
        0.5 * (x[0].ln() + (pf - 1.0) * (x[0] + a).ln() + pf * l3.ln() - pf * (pf * x[0] + a).ln() + pf * 2f64.ln()),
        0.5 * (x[1].ln() - l3.ln()),
    ])
}

/// Auxiliary variables of the `A_p` and `O(−2)` closed forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuarticAux {
    pub u: f64,
    pub v: f64,
    /// `A_i = R_i + w_i` with `w_i = u − v + a_i`, `R_i = √(w_i² + 4uv)`.
    pub a: Vec<f64>,
    /// `B_i = R_i − w_i`.
    pub b: Vec<f64>,
}

impl QuarticAux {
    pub fn new(u: f64, v: f64, params: &[f64]) -> Self {
        let (a, b) = params
            .iter()
            .map(|ai| {
                let w = u - v + ai;
                let r = (w * w + 4.0 * u * v).sqrt();
                // Cancellation-free products: A·B = 4uv.
                if w >= 0.0 {
                    let big = r + w;
                    (big, 4.0 * u * v / big)
                } else {
                    let big = r - w;
                    (4.0 * u * v / big, big)
                }
            })
            .unzip();
        Self { u, v, a, b }
    }

    pub fn h(&self) -> f64 {
        self.u - self.v
    }

    pub fn r(&self) -> f64 {
        2.0 * (self.u * self.v).sqrt()
    }

    /// Largest violation of `A_i − B_i = 2w_i`, `A_i B_i = 4uv`, relative to scale.
    pub fn identity_residual(&self, params: &[f64]) -> f64 {
        let four_uv = 4.0 * self.u * self.v;
        params
            .iter()
            .enumerate()
            .map(|(i, ai)| {
                let w = self.u - self.v + ai;
                let (a, b) = (self.a[i], self.b[i]);
                let d1 = (a - b - 2.0 * w).abs() / (1.0 + a.abs() + b.abs());
                let d2 = (a * b - four_uv).abs() / (1.0 + four_uv.abs() + (a * b).abs());
                d1.max(d2)
            })
            .fold(0.0, f64::max)
    }
}

fn check_ap(a: &[f64], x: [f64; 2]) -> Result<()> {
    if a.is_empty() || a[0] <= 0.0 || a.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(format!(
            "A_p parameters must satisfy 0 < a_2 < ... < a_p, got {a:?}"
        )));
    }
    if !(x[0] > 0.0 && x[1] > 0.0) {
        return Err(domain(format!("A_p point {x:?} is not interior")));
    }
    Ok(())
}

/// `g(v) = 2v + Σ (R_i − w_i) − 2x_2` with `u = v + x_1 − x_2`; increasing in `v`.
fn ap_residual(a: &[f64], x: [f64; 2], v: f64) -> (f64, f64) {
    let c = x[0] - x[1];
    let q = 4.0 * v * (v + c);
    let dq = 8.0 * v + 4.0 * c;
    let mut g = 2.0 * v - 2.0 * x[1];
    let mut dg = 2.0;
    for ai in a {
        let w = c + ai;
        let r = (w * w + q).sqrt();
        // R − w without cancellation.
        g += if w > 0.0 { q / (r + w) } else { r - w };
        dg += if r > 0.0 { dq / (2.0 * r) } else { 0.0 };
    }
    (g, dg)
}

/// Solves the `A_p` relations for `(u, v)` by safeguarded Newton.
///
/// `a` lists `a_2, …, a_p` (with `a_1 = 0` implicit).
pub fn ap_solve_newton(a: &[f64], x: [f64; 2]) -> Result<QuarticAux> {
    check_ap(a, x)?;
    let c = x[0] - x[1];
    let mut lo = (-c).max(0.0);
    let mut hi = lo.max(x[1]) + x[1];
    if ap_residual(a, x, lo).0 > 0.0 || ap_residual(a, x, hi).0 < 0.0 {
        return Err(Error::RootNotFound(format!(
            "A_p relations have no bracketed root at {x:?}"
        )));
    }
    let mut v = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (g, dg) = ap_residual(a, x, v);
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let newton = v - g / dg;
        let next = if newton > lo && newton < hi && dg > 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - v).abs() <= 1e-16 * (1.0 + v.abs()) {
            v = next;
            break;
        }
        v = next;
    }
    let scale = 1.0 + x[0].abs() + x[1].abs();
    let g = ap_residual(a, x, v).0;
    if !(g.abs() <= 1e-12 * scale) {
        return Err(Error::RootNotFound(format!("A_p Newton residual {g:e} at {x:?}")));
    }
    Ok(QuarticAux::new(v + c, v, a))
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn poly_add(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len().max(q.len())];
    for (i, a) in p.iter().enumerate() {
        out[i] += a;
    }
    for (i, b) in q.iter().enumerate() {
        out[i] += b;
    }
    out
}

fn poly_eval(p: &[f64], t: f64) -> (f64, f64) {
    let mut val = 0.0;
    let mut der = 0.0;
    for c in p.iter().rev() {
        der = der * t + val;
        val = val * t + c;
    }
    (val, der)
}

/// Real roots of `Σ c_k t^k` from the eigenvalues of the companion matrix,
/// each polished by Newton on the polynomial.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| {
            let mut t = z.re;
            for _ in 0..8 {
                let (val, der) = poly_eval(&c, t);
                if der == 0.0 {
                    break;
                }
                let step = val / der;
                t -= step;
                if step.abs() <= 1e-16 * (1.0 + t.abs()) {
                    break;
                }
            }
            t
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

/// `(u, v)` for `p = 2` in closed form and for `p = 3` through the quartic
/// `(m² + D)² = 4m²((c + a_2)² + 4v(v + c))`, `m = R_2 + R_3`.
pub fn ap_solve_quartic(a: &[f64], x: [f64; 2]) -> Result<QuarticAux> {
    check_ap(a, x)?;
    let c = x[0] - x[1];
    let v = match a.len() {
        1 => {
            let k = 2.0 * x[1] + c + a[0];
            let w = c + a[0];
            (k * k - w * w) / (4.0 * (k + c))
        }
        2 => {
            let (w2, w3) = (c + a[0], c + a[1]);
            // m = 2x_2 + w_2 + w_3 − 2v.
            let m = [2.0 * x[1] + w2 + w3, -2.0];
            let m2 = poly_mul(&m, &m);
            let dd = w2 * w2 - w3 * w3;
            let lhs = poly_mul(&poly_add(&m2, &[dd]), &poly_add(&m2, &[dd]));
            let inner = [w2 * w2, 4.0 * c, 4.0];
            let rhs = poly_mul(&m2, &inner).iter().map(|t| 4.0 * t).collect::<Vec<_>>();
            let quartic = poly_add(&lhs, &rhs.iter().map(|t| -t).collect::<Vec<_>>());
            let floor = (-c).max(0.0);
            let scale = 1.0 + x[0].abs() + x[1].abs();
            let admissible: Vec<f64> = real_roots(&quartic)
                .into_iter()
                .filter(|&v| {
                    let m = 2.0 * x[1] + w2 + w3 - 2.0 * v;
                    let q = 4.0 * v * (v + c);
                    let (r2, r3) = ((w2 * w2 + q).max(0.0).sqrt(), (w3 * w3 + q).max(0.0).sqrt());
                    v > floor - 1e-12 * scale && m > 0.0 && (r2 + r3 - m).abs() <= 1e-9 * scale
                })
                .collect();
            match admissible.as_slice() {
                [v] => *v,
                [] => return Err(Error::RootNotFound(format!("no admissible quartic root at {x:?}"))),
                many => {
                    return Err(Error::RootNotFound(format!(
                        "ambiguous quartic roots {many:?} at {x:?}"
                    )))
                }
            }
        }
        _ => return Err(domain("closed-form roots are only available for p = 2, 3")),
    };
    Ok(QuarticAux::new(v + c, v, a))
}

/// `A_p` potential `2u = x_1 log 2u + x_2 log 2v − (u + v) + Σ_{i≥2} (w_i log A_i − R_i)`.
pub fn ap_potential(a: &[f64], x: [f64; 2]) -> Result<(f64, QuarticAux)> {
    let aux = ap_solve_newton(a, x)?;
    Ok((ap_value(a, x, &aux), aux))
}

fn ap_value(a: &[f64], x: [f64; 2], aux: &QuarticAux) -> f64 {
    let (u, v) = (aux.u, aux.v);
    let mut two_u = x[0] * (2.0 * u).ln() + x[1] * (2.0 * v).ln() - (u + v);
    for (i, ai) in a.iter().enumerate() {
        let w = u - v + ai;
        let r = 0.5 * (aux.a[i] + aux.b[i]);
        two_u += w * aux.a[i].ln() - r;
    }
    0.5 * two_u
}

/// `∇u = ½(log 2u + Σ log A_i, log 2v − Σ log A_i)`.
pub fn ap_gradient(a: &[f64], x: [f64; 2]) -> Result<[f64; 2]> {
    let aux = ap_solve_newton(a, x)?;
    let s: f64 = aux.a.iter().map(|t| t.ln()).sum();
    Ok([0.5 * ((2.0 * aux.u).ln() + s), 0.5 * ((2.0 * aux.v).ln() - s)])
}

fn check_taubnut(a: f64, alpha: f64, beta: f64, x: [f64; 2]) -> Result<()> {
    if !(a > 0.0) || !(alpha >= 0.0) || !(-alpha - 2.0 * beta >= 0.0) {
        return Err(domain(format!(
            "O(-2) nut parameters need a > 0, alpha >= 0, -alpha - 2 beta >= 0 (got a = {a}, ({alpha}, {beta}))"
        )));
    }
    if !(x[0] > 0.0 && x[1] > 0.0 && 2.0 * x[0] - x[1] + a > 0.0) {
        return Err(domain(format!("O(-2) point {x:?} is not interior")));
    }
    Ok(())
}

/// Solves `2x_1 = R + u + v − a − 2βuv`, `2x_2 = R − u + 3v − a + 2αuv`
/// by Newton in `(u, v)`, continued from `α = β = 0`.
pub fn taubnut_solve(a: f64, alpha: f64, beta: f64, x: [f64; 2]) -> Result<QuarticAux> {
    check_taubnut(a, alpha, beta, x)?;
    let seed = ap_solve_quartic(&[a], x)?;
    let (mut u, mut v) = (seed.u, seed.v);
    let scale = 1.0 + x[0].abs() + x[1].abs();
    let steps = if alpha == 0.0 && beta == 0.0 { 1 } else { 8 };
    for k in 1..=steps {
        let t = k as f64 / steps as f64;
        let (al, be) = (alpha * t, beta * t);
        let f = |u: f64, v: f64| {
            let w = u - v + a;
            let r = (w * w + 4.0 * u * v).sqrt();
            [
                r + u + v - a - 2.0 * be * u * v - 2.0 * x[0],
                r - u + 3.0 * v - a + 2.0 * al * u * v - 2.0 * x[1],
            ]
        };
        let mut fv = f(u, v);
        for _ in 0..100 {
            let norm = fv[0].hypot(fv[1]);
            if norm <= 1e-14 * scale {
                break;
            }
            let w = u - v + a;
            let r = (w * w + 4.0 * u * v).sqrt();
            let (ru, rv) = ((w + 2.0 * v) / r, (2.0 * u - w) / r);
            let j = [
                [ru + 1.0 - 2.0 * be * v, rv + 1.0 - 2.0 * be * u],
                [ru - 1.0 + 2.0 * al * v, rv + 3.0 + 2.0 * al * u],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let du = -(j[1][1] * fv[0] - j[0][1] * fv[1]) / det;
            let dv = -(-j[1][0] * fv[0] + j[0][0] * fv[1]) / det;
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let (nu, nv) = (u + s * du, v + s * dv);
                if nu > 0.0 && nv > 0.0 {
                    let nf = f(nu, nv);
                    if nf[0].hypot(nf[1]) < norm {
                        u = nu;
                        v = nv;
                        fv = nf;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let norm = fv[0].hypot(fv[1]);
        if !(norm <= 1e-12 * scale) {
            return Err(Error::RootNotFound(format!(
                "O(-2) nut relations: residual {norm:e} at {x:?} (continuation step {k})"
            )));
        }
    }
    Ok(QuarticAux::new(u, v, &[a]))
}

/// `O(−2)` potential with nut parameter, in the scaling where the chart's
/// nut vector is `(α/2, β/2)`:
/// `2u = x_1 log 2u + x_2 log 2v + (αu² − βv²)/2 − (u+v) + (β−α)uv + w log A − R
///       − (α+β)(uv(log A − 1) + B²/8 + aB/2)`.
pub fn taubnut_o2_potential(a: f64, alpha: f64, beta: f64, x: [f64; 2]) -> Result<(f64, QuarticAux)> {
    let aux = taubnut_solve(a, alpha, beta, x)?;
    let (u, v) = (aux.u, aux.v);
    let (big_a, big_b) = (aux.a[0], aux.b[0]);
    let w = u - v + a;
    let r = 0.5 * (big_a + big_b);
    let la = big_a.ln();
    let two_u = x[0] * (2.0 * u).ln() + x[1] * (2.0 * v).ln() + 0.5 * (alpha * u * u - beta * v * v) - (u + v)
        + (beta - alpha) * u * v
        + w * la
        - r
        - (alpha + beta) * (u * v * (la - 1.0) + big_b * big_b / 8.0 + a * big_b / 2.0);
    Ok((0.5 * two_u, aux))
}

/// `∇u = (½(log 2u + log A) + α(u−v)/2, ½(log 2v − log A) + β(u−v)/2)`.
pub fn taubnut_o2_gradient(a: f64, alpha: f64, beta: f64, x: [f64; 2]) -> Result<[f64; 2]> {
    let aux = taubnut_solve(a, alpha, beta, x)?;
    let (u, v) = (aux.u, aux.v);
    let la = aux.a[0].ln();
    Ok([
        0.5 * ((2.0 * u).ln() + la) + 0.5 * alpha * (u - v),
        0.5 * ((2.0 * v).ln() - la) + 0.5 * beta * (u - v),
    ])
}

fn s2r2_check(a: f64, x: [f64; 2]) -> Result<()> {
    if !(a > 0.0 && x[0] > 0.0 && x[1] > 0.0 && x[1] < 2.0 * a) {
        return Err(domain(format!(
            "S2 x R2 with a = {a} needs x > 0 and 0 < y < 2a, got {x:?}"
        )));
    }
    Ok(())
}

/// `½(x log x + y log y + (2a−y) log(2a−y) − (x+2a) log(x+2a))`.
pub fn s2r2_potential(a: f64, x: [f64; 2]) -> Result<f64> {
    s2r2_check(a, x)?;
    let (p, q) = (x[0], x[1]);
    Ok(0.5 * (xlogx(p) + xlogx(q) + xlogx(2.0 * a - q) - xlogx(p + 2.0 * a)))
}

pub fn s2r2_gradient(a: f64, x: [f64; 2]) -> Result<[f64; 2]> {
    s2r2_check(a, x)?;
    Ok([
        0.5 * (x[0].ln() - (x[0] + 2.0 * a).ln()),
        0.5 * (x[1].ln() - (2.0 * a - x[1]).ln()),
    ])
}

/// A polygon family with a closed-form potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OracleFamily {
    Flat,
    Op { p: u32, a: f64 },
    Ap { p: u32, a: Vec<f64> },
    TaubNutO2 { a: f64, alpha: f64, beta: f64 },
    S2R2 { a: f64 },
}

impl OracleFamily {
    /// Recognizes a family from a polygon already in normal form
    /// (`ν_1 = (0,1)`, `ν_2 = (1,0)`) and a nut parameter.
    pub fn detect(polygon: &MomentPolygon, nu: NutParameter) -> Result<Self> {
        let n: Vec<(i64, i64)> = polygon.normals().iter().map(|v| (v.a, v.b)).collect();
        if n.len() < 2 || n[0] != (0, 1) || n[1] != (1, 0) {
            return Err(Error::NoOracleForPolygon);
        }
        let lambda = polygon.offsets();
        let d = n.len();
        let family = if d == 2 {
            nu.is_zero().then_some(OracleFamily::Flat)
        } else if d == 3 && n[2] == (0, -1) {
            nu.is_zero().then(|| OracleFamily::S2R2 { a: lambda[2] / 2.0 })
        } else if d == 3 && n[2].1 == -1 && n[2].0 >= 1 {
            let p = n[2].0 as u32;
            let a = lambda[2];
            if nu.is_zero() {
                Some(OracleFamily::Op { p, a })
            } else if p == 2 {
                Some(OracleFamily::TaubNutO2 {
                    a,
                    alpha: 2.0 * nu.alpha,
                    beta: 2.0 * nu.beta,
                })
            } else {
                None
            }
        } else if n
            .iter()
            .enumerate()
            .skip(1)
            .all(|(j, v)| *v == (j as i64, 1 - j as i64))
            && nu.is_zero()
        {
            let a = crate::chart::solve_a(polygon)?;
            Some(OracleFamily::Ap {
                p: (d - 1) as u32,
                a: a[1..].to_vec(),
            })
        } else {
            None
        };
        family.ok_or(Error::NoOracleForPolygon)
    }

    pub fn value(&self, x: [f64; 2]) -> Result<f64> {
        match self {
            OracleFamily::Flat => flat_potential(x),
            OracleFamily::Op { p, a } => op_potential(*p, *a, x),
            OracleFamily::Ap { a, .. } => Ok(ap_potential(a, x)?.0),
            OracleFamily::TaubNutO2 { a, alpha, beta } => Ok(taubnut_o2_potential(*a, *alpha, *beta, x)?.0),
            OracleFamily::S2R2 { a } => s2r2_potential(*a, x),
        }
    }

    pub fn gradient(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        match self {
            OracleFamily::Flat => flat_gradient(x),
            OracleFamily::Op { p, a } => op_gradient(*p, *a, x),
            OracleFamily::Ap { a, .. } => ap_gradient(a, x),
            OracleFamily::TaubNutO2 { a, alpha, beta } => taubnut_o2_gradient(*a, *alpha, *beta, x),
            OracleFamily::S2R2 { a } => s2r2_gradient(*a, x),
        }
    }

    pub fn name(&self) -> String {
        match self {
            OracleFamily::Flat => "flat".into(),
            OracleFamily::Op { p, .. } => format!("O(-{p})"),
            OracleFamily::Ap { p, .. } => format!("A_{p}"),
            OracleFamily::TaubNutO2 { .. } => "O(-2) nut".into(),
            OracleFamily::S2R2 { .. } => "S2xR2".into(),
        }
    }
}

/// Sup-norm gaps between the chart's `ξ ∘ invert` and an oracle, through two
/// independent routes: finite differences of the oracle value, and the
/// oracle's closed-form gradient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub family: OracleFamily,
    pub points: usize,
    pub max_value_fd_gap: f64,
    pub max_gradient_gap: f64,
}

impl OracleComparison {
    pub fn max_gap(&self) -> f64 {
        self.max_value_fd_gap.max(self.max_gradient_gap)
    }
}

/// Compares at the images `x(H, r)` of the given half-plane points.
pub fn compare_with_oracle(
    chart: &Chart,
    family: &OracleFamily,
    points: &[HalfPlanePoint],
    exec: Execution,
) -> Result<OracleComparison> {
    let gaps = exec::try_map(exec, points, |&p| {
        let x = chart.action_coords(p);
        let q = chart.invert(x, None)?;
        let xi = chart.xi(q);
        let h = 2e-3 * chart.polygon().min_edge_value(x).min(1.0);
        let err = std::cell::RefCell::new(None);
        let fd_grad = fd::gradient_five(
            |y| {
                family.value(y).unwrap_or_else(|e| {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                })
            },
            x,
            h,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        let grad = family.gradient(x)?;
        let g1 = (fd_grad[0] - xi[0]).abs().max((fd_grad[1] - xi[1]).abs());
        let g2 = (grad[0] - xi[0]).abs().max((grad[1] - xi[1]).abs());
        Ok::<_, Error>((g1, g2))
    })?;
    Ok(OracleComparison {
        family: family.clone(),
        points: points.len(),
        max_value_fd_gap: gaps.iter().map(|g| g.0).fold(0.0, f64::max),
        max_gradient_gap: gaps.iter().map(|g| g.1).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_examples() {
        assert_eq!(flat_potential([0.5, 0.5]).unwrap(), -0.5);
        assert_eq!(flat_gradient([0.5, 0.5]).unwrap(), [0.0, 0.0]);
        assert!(flat_potential([0.0, 1.0]).is_err());
    }

    #[test]
    fn op_example_value() {
        let u = op_potential(2, 1.0, [1.0, 1.0]).unwrap();
        let expect = 3.0 * 2f64.ln() - 1.5 * 3f64.ln() - 1.0;
        assert!((u - expect).abs() < 1e-15);
        assert!(op_potential(2, 1.0, [1.0, 4.0]).is_err());
    }

    #[test]
    fn op_gradient_matches_value() {
        for p in 1..=4 {
            for x in [[1.0, 1.0], [0.3, 0.2], [2.0, 3.0]] {
                let g = op_gradient(p, 1.5, x).unwrap();
                let fd = fd::gradient_five(|y| op_potential(p, 1.5, y).unwrap(), x, 1e-4);
                assert!((g[0] - fd[0]).abs() < 1e-9 && (g[1] - fd[1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ap_recovers_u_v() {
        let (h, r) = (1.0_f64, 2.0_f64);
        let rho = h.hypot(r);
        let (u, v) = (0.5 * (h + rho), 0.5 * (rho - h));
        let a = [1.0];
        // x from the O(−2) relations.
        let w = u - v + 1.0;
        let rr = (w * w + 4.0 * u * v).sqrt();
        let x = [0.5 * (rr + u + v - 1.0), 0.5 * (rr - u + 3.0 * v - 1.0)];
        for aux in [ap_solve_newton(&a, x).unwrap(), ap_solve_quartic(&a, x).unwrap()] {
            assert!((aux.u - u).abs() < 1e-10 && (aux.v - v).abs() < 1e-10, "{aux:?}");
            assert!(aux.identity_residual(&a) < 1e-12);
        }
    }

    #[test]
    fn quartic_and_newton_paths_agree() {
        for a in [vec![1.0], vec![1.0, 2.0], vec![0.5, 3.0]] {
            for x in [[1.0, 1.0], [2.0, 0.5], [0.7, 1.9], [0.05, 0.1], [5.0, 3.0]] {
                let n = ap_solve_newton(&a, x).unwrap();
                let q = ap_solve_quartic(&a, x).unwrap();
                assert!((n.v - q.v).abs() < 1e-10 && (n.u - q.u).abs() < 1e-10, "{a:?} {x:?}");
            }
        }
    }

    #[test]
    fn real_roots_of_known_quartic() {
        // (t − 1)(t + 2)(t² + 1) = t⁴ + t³ − t² + t − 2.
        let r = real_roots(&[-2.0, 1.0, -1.0, 1.0, 1.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 2.0).abs() < 1e-14 && (r[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ap_p2_agrees_with_op2() {
        for x in [[1.0, 1.0], [0.4, 0.6], [3.0, 2.0]] {
            let g = ap_gradient(&[1.0], x).unwrap();
            let o = op_gradient(2, 1.0, x).unwrap();
            assert!((g[0] - o[0]).abs() < 1e-10 && (g[1] - o[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn taubnut_zero_nut_matches_op2() {
        for x in [[1.0, 1.0], [0.4, 0.6]] {
            let g = taubnut_o2_gradient(1.0, 0.0, 0.0, x).unwrap();
            let o = op_gradient(2, 1.0, x).unwrap();
            assert!((g[0] - o[0]).abs() < 1e-10 && (g[1] - o[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn taubnut_gradient_matches_value() {
        for (al, be) in [(1.0, -1.0), (1.0, -0.9), (2.0, -1.5)] {
            for x in [[1.0, 1.0], [2.0, 0.5], [0.4, 0.6]] {
                let g = taubnut_o2_gradient(1.0, al, be, x).unwrap();
                let fd = fd::gradient_five(|y| taubnut_o2_potential(1.0, al, be, y).unwrap().0, x, 1e-4);
                assert!(
                    (g[0] - fd[0]).abs() < 1e-8 && (g[1] - fd[1]).abs() < 1e-8,
                    "{al} {be} {x:?}"
                );
            }
        }
        assert!(taubnut_o2_potential(1.0, -1.0, 0.0, [1.0, 1.0]).is_err());
    }

    #[test]
    fn s2r2_examples() {
        let a = 1.0;
        let x = [0.7, 0.4];
        let h = 1e-4;
        let uxx = fd::d2(|t| s2r2_potential(a, [t, x[1]]).unwrap(), x[0], h);
        assert!((uxx - 0.5 * (1.0 / x[0] - 1.0 / (x[0] + 2.0 * a))).abs() < 1e-6);
        assert!(s2r2_potential(a, [1.0, 2.5]).is_err());
    }

    #[test]
    fn detect_families() {
        let poly = |n: &[(i64, i64)], l: &[f64]| MomentPolygon::from_pairs(n, l).unwrap();
        let z = NutParameter::ZERO;
        assert_eq!(
            OracleFamily::detect(&poly(&[(0, 1), (1, 0)], &[0.0, 0.0]), z).unwrap(),
            OracleFamily::Flat
        );
        assert_eq!(
            OracleFamily::detect(&poly(&[(0, 1), (1, 0), (3, -1)], &[0.0, 0.0, 2.0]), z).unwrap(),
            OracleFamily::Op { p: 3, a: 2.0 }
        );
        assert_eq!(
            OracleFamily::detect(&poly(&[(0, 1), (1, 0), (2, -1), (3, -2)], &[0.0, 0.0, 1.0, 3.0]), z).unwrap(),
            OracleFamily::Ap {
                p: 3,
                a: vec![1.0, 2.0]
            }
        );
        assert_eq!(
            OracleFamily::detect(
                &poly(&[(0, 1), (1, 0), (2, -1)], &[0.0, 0.0, 1.0]),
                NutParameter::new(0.5, -0.5)
            )
            .unwrap(),
            OracleFamily::TaubNutO2 {
                a: 1.0,
                alpha: 1.0,
                beta: -1.0
            }
        );
        assert_eq!(
            OracleFamily::detect(&poly(&[(0, 1), (1, 0), (0, -1)], &[0.0, 0.0, 2.0]), z).unwrap(),
            OracleFamily::S2R2 { a: 1.0 }
        );
        let five = poly(&[(0, 1), (1, 0), (3, -1), (2, -1), (1, -1)], &[0.0, 0.0, 1.0, 2.0, 4.0]);
        assert!(matches!(OracleFamily::detect(&five, z), Err(Error::NoOracleForPolygon)));
    }
}
