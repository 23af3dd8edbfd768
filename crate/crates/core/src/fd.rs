//! Central finite differences.

use crate::harmonic::HalfPlanePoint;

/// Step `max(1e-6, 1e-6·|c|)` for a coordinate value `c`.
pub fn step_for(c: f64) -> f64 {
    (1e-6 * c.abs()).max(1e-6)
}

pub fn d1<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

/// Fourth-order five-point first derivative.
pub fn d1_five<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

pub fn d2<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
}

/// `[∂f/∂H, ∂f/∂r]`; the `r` step is capped at `r/2` so it never crosses `r = 0`.
pub fn half_plane_gradient<F: Fn(HalfPlanePoint) -> f64>(f: F, p: HalfPlanePoint, h: f64) -> [f64; 2] {
    let hr = h.min(0.5 * p.r);
    [
        d1(|t| f(HalfPlanePoint::new(t, p.r)), p.h, h),
        d1(|t| f(HalfPlanePoint::new(p.h, t)), p.r, hr),
    ]
}

/// Gradient of a function on the plane by five-point differences.
pub fn gradient_five<F: Fn([f64; 2]) -> f64>(f: F, x: [f64; 2], h: f64) -> [f64; 2] {
    [d1_five(|t| f([t, x[1]]), x[0], h), d1_five(|t| f([x[0], t]), x[1], h)]
}
