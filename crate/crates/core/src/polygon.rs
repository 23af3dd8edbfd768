//! Unbounded moment polygons.
//!
//! A polygon is given by ordered primitive inward normals `ν_1, …, ν_d` and
//! offsets `λ_1, …, λ_d`, and is the region `ℓ_i(x) = ⟨x, ν_i⟩ + λ_i ≥ 0`.
//! Edges are ordered so that `E_1` and `E_d` are the unbounded ones and
//! `det(ν_{i-1}, ν_i) = -1` for consecutive edges. Offsets are gauged so that
//! the vertex `E_1 ∩ E_2` sits at the origin (`λ_1 = λ_2 = 0`).
//!
//! Edge numbers in this API are 1-based, matching `E_1 .. E_d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector of the integer lattice `Z²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeVector {
    pub a: i64,
    pub b: i64,
}

impl LatticeVector {
    pub const fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }

    pub fn is_primitive(&self) -> bool {
        gcd(self.a.unsigned_abs(), self.b.unsigned_abs()) == 1
    }

    /// `det(self, other) = a·b' − b·a'`, computed without overflow.
    pub fn det(&self, other: &LatticeVector) -> i128 {
        self.a as i128 * other.b as i128 - self.b as i128 * other.a as i128
    }

    pub fn to_f64(self) -> [f64; 2] {
        [self.a as f64, self.b as f64]
    }

    pub fn sub(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector::new(self.a - other.a, self.b - other.b)
    }
}

impl From<(i64, i64)> for LatticeVector {
    fn from((a, b): (i64, i64)) -> Self {
        Self::new(a, b)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `det(p, q)` for real 2-vectors.
#[inline]
pub fn det2(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

/// A validated unbounded moment polygon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentPolygon {
    normals: Vec<LatticeVector>,
    offsets: Vec<f64>,
    /// Original-coordinate position of the vertex `E_1 ∩ E_2`; original
    /// points are `x + translation`.
    translation: [f64; 2],
}

/// Coarse classification of a moment polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PolygonClass {
    pub unbounded: bool,
    pub strictly_unbounded: bool,
    pub c1_zero: bool,
}

/// Integer 2×2 matrix acting on normals (rows).
pub type IntMatrix = [[i64; 2]; 2];

impl MomentPolygon {
    /// Validates a polygon whose offsets are already in gauge (`λ_1 = λ_2 = 0`).
    pub fn new(normals: Vec<LatticeVector>, offsets: Vec<f64>) -> Result<Self> {
        check_normals(&normals, &offsets)?;
        if offsets[0] != 0.0 || offsets[1] != 0.0 {
            return Err(Error::BadGauge {
                lambda1: offsets[0],
                lambda2: offsets[1],
            });
        }
        let polygon = Self {
            normals,
            offsets,
            translation: [0.0, 0.0],
        };
        polygon.check_region()?;
        Ok(polygon)
    }

    /// Validates a polygon with arbitrary offsets, translating it so that the
    /// first vertex lands on the origin. The applied translation is recorded.
    pub fn translated(normals: Vec<LatticeVector>, offsets: Vec<f64>) -> Result<Self> {
        check_normals(&normals, &offsets)?;
        let v = vertex_of(&normals[0], &normals[1], offsets[0], offsets[1]);
        let mut shifted: Vec<f64> = normals
            .iter()
            .zip(&offsets)
            .map(|(n, l)| l + v[0] * n.a as f64 + v[1] * n.b as f64)
            .collect();
        shifted[0] = 0.0;
        shifted[1] = 0.0;
        let polygon = Self {
            normals,
            offsets: shifted,
            translation: v,
        };
        polygon.check_region()?;
        Ok(polygon)
    }

    /// Convenience constructor from integer pairs.
    pub fn from_pairs(normals: &[(i64, i64)], offsets: &[f64]) -> Result<Self> {
        Self::new(
            normals.iter().copied().map(LatticeVector::from).collect(),
            offsets.to_vec(),
        )
    }

    pub fn normals(&self) -> &[LatticeVector] {
        &self.normals
    }

    pub fn normal(&self, i: usize) -> LatticeVector {
        self.normals[i - 1]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn translation(&self) -> [f64; 2] {
        self.translation
    }

    /// Number of edges `d`.
    pub fn d(&self) -> usize {
        self.normals.len()
    }

    pub fn first_normal(&self) -> LatticeVector {
        self.normals[0]
    }

    pub fn last_normal(&self) -> LatticeVector {
        self.normals[self.d() - 1]
    }

    pub fn classify(&self) -> PolygonClass {
        let d = self.d();
        let strictly_unbounded = self.last_normal().det(&self.first_normal()) != 0;
        let c1_zero = (1..d - 1).all(|j| self.normals[j - 1].det(&self.normals[j + 1]) == -2);
        PolygonClass {
            unbounded: true,
            strictly_unbounded,
            c1_zero,
        }
    }

    /// `ℓ_i(x) = ⟨x, ν_i⟩ + λ_i` for edge `i` in `1..=d`.
    pub fn edge_function(&self, i: usize, x: [f64; 2]) -> Result<f64> {
        if i == 0 || i > self.d() {
            return Err(Error::EdgeIndexOutOfRange { index: i, d: self.d() });
        }
        Ok(self.ell(i - 1, x))
    }

    #[inline]
    pub(crate) fn ell(&self, k: usize, x: [f64; 2]) -> f64 {
        let n = self.normals[k];
        x[0] * n.a as f64 + x[1] * n.b as f64 + self.offsets[k]
    }

    /// All edge functions at `x`, in edge order.
    pub fn edge_values(&self, x: [f64; 2]) -> Vec<f64> {
        (0..self.d()).map(|k| self.ell(k, x)).collect()
    }

    pub fn is_interior(&self, x: [f64; 2]) -> bool {
        (0..self.d()).all(|k| self.ell(k, x) > 0.0)
    }

    /// Smallest edge function value at `x` (distance proxy to `∂P`).
    pub fn min_edge_value(&self, x: [f64; 2]) -> f64 {
        (0..self.d()).map(|k| self.ell(k, x)).fold(f64::INFINITY, f64::min)
    }

    /// Vertex `E_j ∩ E_{j+1}` for `j` in `1..d`.
    pub fn vertex(&self, j: usize) -> [f64; 2] {
        vertex_of(
            &self.normals[j - 1],
            &self.normals[j],
            self.offsets[j - 1],
            self.offsets[j],
        )
    }

    /// Guillemin potential `½ Σ ℓ_i log ℓ_i`.
    pub fn guillemin_potential(&self, x: [f64; 2]) -> Result<f64> {
        let mut sum = 0.0;
        for k in 0..self.d() {
            let l = self.ell(k, x);
            if l <= 0.0 {
                return Err(Error::PointNotInterior(x[0], x[1]));
            }
            sum += l * l.ln();
        }
        Ok(0.5 * sum)
    }

    /// Hessian of the Guillemin potential, `½ Σ ν_i ν_iᵀ / ℓ_i`.
    pub fn guillemin_hessian(&self, x: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        let mut h = [[0.0; 2]; 2];
        for (k, n) in self.normals.iter().enumerate() {
            let l = self.ell(k, x);
            if l <= 0.0 {
                return Err(Error::PointNotInterior(x[0], x[1]));
            }
            let n = n.to_f64();
            for i in 0..2 {
                for j in 0..2 {
                    h[i][j] += 0.5 * n[i] * n[j] / l;
                }
            }
        }
        Ok(h)
    }

    /// Applies the `SL(2,Z)` transform sending `ν_1 ↦ (0,1)` and `ν_2 ↦ (1,0)`.
    ///
    /// Returns the transformed polygon and the matrix `M` with `ν' = M ν`.
    /// Points transform by `x' = M^{-T} x`, which leaves every `ℓ_i` (and so
    /// every offset) unchanged.
    pub fn normalize_sl2z(&self) -> Result<(MomentPolygon, IntMatrix)> {
        if !self.classify().strictly_unbounded {
            return Err(Error::NotStrictlyUnbounded);
        }
        let (n1, n2) = (self.normals[0], self.normals[1]);
        let m: IntMatrix = [[n1.b, -n1.a], [-n2.b, n2.a]];
        let normals = self.normals.iter().map(|n| apply(&m, n)).collect();
        // M^{-T} = [[α_2, β_2], [α_1, β_1]].
        let t = self.translation;
        let translation = [
            n2.a as f64 * t[0] + n2.b as f64 * t[1],
            n1.a as f64 * t[0] + n1.b as f64 * t[1],
        ];
        let polygon = MomentPolygon {
            normals,
            offsets: self.offsets.clone(),
            translation,
        };
        Ok((polygon, m))
    }

    fn check_region(&self) -> Result<()> {
        let d = self.d();
        let first = self.first_normal();
        let last = self.last_normal();
        // Both unbounded edges must stay inside every half-plane.
        for (k, n) in self.normals.iter().enumerate() {
            if n.det(&first) < 0 || last.det(n) < 0 {
                return Err(Error::EmptyOrDegenerateRegion(format!(
                    "edge {} cuts off an unbounded edge (the normals close up into a bounded polygon)",
                    k + 1
                )));
            }
        }
        let scale = 1.0
            + self.offsets.iter().fold(0.0_f64, |m, l| m.max(l.abs()))
                * self
                    .normals
                    .iter()
                    .fold(1.0_f64, |m, n| m.max(n.a.abs().max(n.b.abs()) as f64));
        let tol = 1e-12 * scale;
        for j in 1..d {
            let v = self.vertex(j);
            for k in 0..d {
                if k + 1 == j || k == j {
                    continue;
                }
                let l = self.ell(k, v);
                if l <= tol {
                    return Err(Error::EmptyOrDegenerateRegion(format!(
                        "vertex {j} = ({}, {}) is not strictly inside edge {} (l = {l})",
                        v[0],
                        v[1],
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_normals(normals: &[LatticeVector], offsets: &[f64]) -> Result<()> {
    if normals.is_empty() || normals.len() != offsets.len() {
        return Err(Error::ShapeMismatch {
            normals: normals.len(),
            offsets: offsets.len(),
        });
    }
    if normals.len() < 2 {
        return Err(Error::TooFewEdges(normals.len()));
    }
    if let Some(i) = normals.iter().position(|n| !n.is_primitive()) {
        return Err(Error::NonPrimitiveNormal(i + 1));
    }
    for i in 1..normals.len() {
        let value = normals[i - 1].det(&normals[i]);
        if value != -1 {
            return Err(Error::BadAdjacentDeterminant { index: i + 1, value });
        }
    }
    if let Some(l) = offsets.iter().find(|l| !l.is_finite()) {
        return Err(Error::EmptyOrDegenerateRegion(format!("non-finite offset {l}")));
    }
    Ok(())
}

/// Solves `⟨v, p⟩ = −λ_p`, `⟨v, q⟩ = −λ_q` for `det(p, q) = −1`.
fn vertex_of(p: &LatticeVector, q: &LatticeVector, lp: f64, lq: f64) -> [f64; 2] {
    [q.b as f64 * lp - p.b as f64 * lq, -(q.a as f64) * lp + p.a as f64 * lq]
}

fn apply(m: &IntMatrix, n: &LatticeVector) -> LatticeVector {
    let a = m[0][0] as i128 * n.a as i128 + m[0][1] as i128 * n.b as i128;
    let b = m[1][0] as i128 * n.a as i128 + m[1][1] as i128 * n.b as i128;
    LatticeVector::new(
        i64::try_from(a).expect("normal overflow"),
        i64::try_from(b).expect("normal overflow"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(normals: &[(i64, i64)], offsets: &[f64]) -> Result<MomentPolygon> {
        MomentPolygon::from_pairs(normals, offsets)
    }

    #[test]
    fn validates_standard_polygons() {
        let o2 = poly(&[(0, 1), (1, 0), (2, -1)], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(o2.d(), 3);
        let quadrant = poly(&[(0, 1), (1, 0)], &[0.0, 0.0]).unwrap();
        assert_eq!(quadrant.d(), 2);
        let s2r2 = poly(&[(0, 1), (1, 0), (0, -1)], &[0.0, 0.0, 2.0]).unwrap();
        assert!(!s2r2.classify().strictly_unbounded);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(poly(&[(0, 1), (2, 0)], &[0.0, 0.0]), Err(Error::NonPrimitiveNormal(2)));
        assert_eq!(
            poly(&[(0, 1), (0, 1)], &[0.0, 0.0]),
            Err(Error::BadAdjacentDeterminant { index: 2, value: 0 })
        );
        assert!(matches!(
            poly(&[(0, 1), (1, 0), (2, -1)], &[0.0, 0.5, 1.0]),
            Err(Error::BadGauge { .. })
        ));
        assert!(matches!(
            poly(&[(0, 1), (1, 0)], &[0.0]),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(poly(&[(0, 1)], &[0.0]), Err(Error::TooFewEdges(1))));
    }

    #[test]
    fn rejects_collapsed_or_empty_regions() {
        // λ_3 = 0 puts the second vertex on the first one.
        assert!(matches!(
            poly(&[(0, 1), (1, 0), (2, -1)], &[0.0, 0.0, 0.0]),
            Err(Error::EmptyOrDegenerateRegion(_))
        ));
        assert!(matches!(
            poly(&[(0, 1), (1, 0), (2, -1)], &[0.0, 0.0, -1.0]),
            Err(Error::EmptyOrDegenerateRegion(_))
        ));
        // A closed triangle is bounded.
        assert!(matches!(
            poly(&[(0, 1), (1, 0), (-1, -1)], &[0.0, 0.0, 3.0]),
            Err(Error::EmptyOrDegenerateRegion(_))
        ));
    }

    #[test]
    fn translated_constructor_records_shift() {
        // O(-2) moved by (2, -3): ℓ_i(y) = ⟨y - t, ν_i⟩ + λ_i.
        let t = [2.0, -3.0];
        let normals = [(0, 1), (1, 0), (2, -1)];
        let base = [0.0, 0.0, 1.0];
        let offsets: Vec<f64> = normals
            .iter()
            .zip(base)
            .map(|(n, l)| l - (t[0] * n.0 as f64 + t[1] * n.1 as f64))
            .collect();
        let p = MomentPolygon::translated(normals.iter().copied().map(LatticeVector::from).collect(), offsets).unwrap();
        assert_eq!(p.translation(), t);
        assert_eq!(p.offsets(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn classification_examples() {
        let a3 = poly(&[(0, 1), (1, 0), (2, -1), (3, -2)], &[0.0, 0.0, 1.0, 3.0]).unwrap();
        let c = a3.classify();
        assert!(c.unbounded && c.strictly_unbounded && c.c1_zero);

        let o3 = poly(&[(0, 1), (1, 0), (3, -1)], &[0.0, 0.0, 1.0]).unwrap();
        let c = o3.classify();
        assert!(c.strictly_unbounded && !c.c1_zero);
        assert_eq!(LatticeVector::new(0, 1).det(&LatticeVector::new(3, -1)), -3);

        let s2r2 = poly(&[(0, 1), (1, 0), (0, -1)], &[0.0, 0.0, 2.0]).unwrap();
        let c = s2r2.classify();
        assert!(c.unbounded && !c.strictly_unbounded);

        let quadrant = poly(&[(0, 1), (1, 0)], &[0.0, 0.0]).unwrap();
        assert!(quadrant.classify().c1_zero);
    }

    #[test]
    fn edge_function_examples() {
        let o2 = poly(&[(0, 1), (1, 0), (2, -1)], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(o2.edge_function(3, [0.0, 0.0]).unwrap(), 1.0);
        // A point on E_3: 2x_1 - x_2 + 1 = 0.
        assert_eq!(o2.edge_function(3, [1.0, 3.0]).unwrap(), 0.0);
        let quadrant = poly(&[(0, 1), (1, 0)], &[0.0, 0.0]).unwrap();
        assert_eq!(quadrant.edge_function(1, [3.0, 5.0]).unwrap(), 5.0);
        assert!(matches!(
            quadrant.edge_function(3, [0.0, 0.0]),
            Err(Error::EdgeIndexOutOfRange { index: 3, d: 2 })
        ));
        assert!(quadrant.edge_function(0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn guillemin_examples() {
        let quadrant = poly(&[(0, 1), (1, 0)], &[0.0, 0.0]).unwrap();
        assert_eq!(quadrant.guillemin_potential([1.0, 1.0]).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((quadrant.guillemin_potential([e, e]).unwrap() - e).abs() < 1e-15);
        let o2 = poly(&[(0, 1), (1, 0), (2, -1)], &[0.0, 0.0, 1.0]).unwrap();
        let v = o2.guillemin_potential([1.0, 1.0]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(
            o2.guillemin_potential([0.0, 1.0]),
            Err(Error::PointNotInterior(..))
        ));
    }

    #[test]
    fn vertices_are_on_adjacent_edges() {
        let a3 = poly(&[(0, 1), (1, 0), (2, -1), (3, -2)], &[0.0, 0.0, 1.0, 3.0]).unwrap();
        for j in 1..a3.d() {
            let v = a3.vertex(j);
            assert!(a3.edge_function(j, v).unwrap().abs() < 1e-14);
            assert!(a3.edge_function(j + 1, v).unwrap().abs() < 1e-14);
        }
        assert_eq!(a3.vertex(1), [0.0, 0.0]);
    }

    #[test]
    fn normalization_examples() {
        let o2 = poly(&[(0, 1), (1, 0), (2, -1)], &[0.0, 0.0, 1.0]).unwrap();
        let (n, m) = o2.normalize_sl2z().unwrap();
        assert_eq!(m, [[1, 0], [0, 1]]);
        assert_eq!(n.normals(), o2.normals());

        // Rotate A_2 by [[0,-1],[1,0]] and recover it.
        let rot = |(a, b): (i64, i64)| (-b, a);
        let rotated: Vec<(i64, i64)> = [(0, 1), (1, 0), (2, -1)].into_iter().map(rot).collect();
        let p = poly(&rotated, &[0.0, 0.0, 1.0]).unwrap();
        let (n, _) = p.normalize_sl2z().unwrap();
        let expect: Vec<LatticeVector> = [(0, 1), (1, 0), (2, -1)].into_iter().map(LatticeVector::from).collect();
        assert_eq!(n.normals(), expect.as_slice());

        // Quadrant under a shear [[1,1],[0,1]] (ν ↦ Sν).
        let shear = |(a, b): (i64, i64)| (a + b, b);
        let q: Vec<(i64, i64)> = [(0, 1), (1, 0)].into_iter().map(shear).collect();
        let p = poly(&q, &[0.0, 0.0]).unwrap();
        let (n, _) = p.normalize_sl2z().unwrap();
        assert_eq!(n.normals(), &[LatticeVector::new(0, 1), LatticeVector::new(1, 0)]);

        let s2r2 = poly(&[(0, 1), (1, 0), (0, -1)], &[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(s2r2.normalize_sl2z(), Err(Error::NotStrictlyUnbounded));
    }
}
