//! Standard polygons used throughout the tests, benches and examples.

use crate::harmonic::NutParameter;
use crate::polygon::MomentPolygon;
use crate::specfile::PolygonSpec;

fn build(n: &[(i64, i64)], l: &[f64]) -> MomentPolygon {
    MomentPolygon::from_pairs(n, l).expect("corpus polygons are valid")
}

/// Flat quadrant, `d = 2`.
pub fn quadrant() -> MomentPolygon {
    build(&[(0, 1), (1, 0)], &[0.0, 0.0])
}

/// Total space of `O(−p)`: normals `(0,1), (1,0), (p,−1)`, offsets `0, 0, a`.
pub fn op(p: i64, a: f64) -> MomentPolygon {
    build(&[(0, 1), (1, 0), (p, -1)], &[0.0, 0.0, a])
}

/// `A_p` polygon with `ν_j = (j−1, −(j−2))` and offsets `λ_{j+1} = j(j−1)/2`.
pub fn ap(p: i64) -> MomentPolygon {
    let mut normals = vec![(0, 1)];
    normals.extend((1..=p).map(|j| (j, 1 - j)));
    let offsets: Vec<f64> = (0..=p)
        .map(|j| if j == 0 { 0.0 } else { (j * (j - 1) / 2) as f64 })
        .collect();
    build(&normals, &offsets)
}

/// A five-edge polygon with `c_1 ≠ 0` and `a = (0, 1, 2, 3)`.
pub fn five_edge() -> MomentPolygon {
    build(&[(0, 1), (1, 0), (3, -1), (2, -1), (1, -1)], &[0.0, 0.0, 1.0, 2.0, 4.0])
}

/// `S² × R²`: normals `(0,1), (1,0), (0,−1)`, offsets `0, 0, 2a`.
pub fn s2r2(a: f64) -> MomentPolygon {
    build(&[(0, 1), (1, 0), (0, -1)], &[0.0, 0.0, 2.0 * a])
}

/// The strictly unbounded test corpus.
pub fn standard() -> Vec<(String, MomentPolygon)> {
    let mut out = vec![("quadrant".to_string(), quadrant())];
    for p in 1..=4 {
        out.push((format!("O(-{p})"), op(p, 1.0)));
    }
    for p in 2..=4 {
        out.push((format!("A_{p}"), ap(p)));
    }
    out.push(("five-edge".to_string(), five_edge()));
    out
}

/// Three nut parameters strictly inside the admissible cone:
/// `½(ν_d − ν_1)`, `ν_d − ν_1` and `0.3ν_d − 0.8ν_1`.
pub fn interior_nuts(polygon: &MomentPolygon) -> [NutParameter; 3] {
    let n1 = polygon.first_normal().to_f64();
    let nd = polygon.last_normal().to_f64();
    let diff = [nd[0] - n1[0], nd[1] - n1[1]];
    [
        NutParameter::new(0.5 * diff[0], 0.5 * diff[1]),
        NutParameter::new(diff[0], diff[1]),
        NutParameter::new(0.3 * nd[0] - 0.8 * n1[0], 0.3 * nd[1] - 0.8 * n1[1]),
    ]
}

/// Spec documents for the shipped examples.
pub fn example_specs() -> Vec<PolygonSpec> {
    let mut specs = vec![PolygonSpec::from_polygon("quadrant", &quadrant(), None)];
    for p in 1..=4 {
        specs.push(PolygonSpec::from_polygon(&format!("o{p}"), &op(p, 1.0), None));
    }
    for p in 2..=4 {
        specs.push(PolygonSpec::from_polygon(&format!("a{p}"), &ap(p), None));
    }
    specs.push(PolygonSpec::from_polygon("five-edge", &five_edge(), None));
    specs.push(PolygonSpec::from_polygon("s2r2", &s2r2(1.0), None));
    specs.push(PolygonSpec::from_polygon(
        "o2-taubnut",
        &op(2, 1.0),
        Some(NutParameter::new(0.5, -0.5)),
    ));
    specs.push(PolygonSpec::from_polygon(
        "o2-taubnut-general",
        &op(2, 1.0),
        Some(NutParameter::new(0.5, -0.45)),
    ));
    specs.push(PolygonSpec::from_polygon(
        "o3-taubnut",
        &op(3, 1.0),
        Some(NutParameter::new(1.0, -1.0)),
    ));
    specs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::solve_a;

    #[test]
    fn corpus_is_valid_and_strictly_unbounded() {
        for (name, p) in standard() {
            assert!(p.classify().strictly_unbounded, "{name}");
            for nu in interior_nuts(&p) {
                assert!(nu.is_interior(&p), "{name} {nu:?}");
            }
        }
        assert!(!s2r2(1.0).classify().strictly_unbounded);
    }

    #[test]
    fn ap_offsets() {
        assert_eq!(ap(3).offsets(), &[0.0, 0.0, 1.0, 3.0]);
        assert_eq!(ap(4).offsets(), &[0.0, 0.0, 1.0, 3.0, 6.0]);
        assert_eq!(solve_a(&ap(4)).unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert!(ap(4).classify().c1_zero);
        assert!(!five_edge().classify().c1_zero);
    }

    #[test]
    fn ricci_flat_direction_is_interior() {
        let n = interior_nuts(&ap(3));
        assert_eq!(n[0], NutParameter::new(1.5, -1.5));
    }
}
