//! Closed plane curves parametrized over [0, 2π) and interval enclosures on parameter cells.

use std::f64::consts::{PI, TAU};

/// A closed C^∞ curve in R² with enclosures used by the Darboux machinery.
pub trait ClosedCurve: Send + Sync {
    fn position(&self, theta: f64) -> [f64; 2];
    fn velocity(&self, theta: f64) -> [f64; 2];
    /// Total arclength.
    fn length(&self) -> f64;
    /// Arclength from parameter 0 to `theta` in [0, 2π].
    fn arclength_at(&self, theta: f64) -> f64;
    /// Parameter at arclength `s` in [0, length].
    fn parameter_at(&self, s: f64) -> f64;
    /// Bounds on ‖γ(θ) − c‖ for θ in the cell.
    fn distance_enclosure(&self, c: [f64; 2], t0: f64, t1: f64) -> (f64, f64);
    /// Bounds on |γ'(θ)| for θ in the cell.
    fn speed_enclosure(&self, t0: f64, t1: f64) -> (f64, f64);
    /// Bounds on d/dθ ‖γ(θ) − c‖ over the cell. Exact where the geometry allows,
    /// otherwise the range over a fixed set of samples.
    fn distance_slope_enclosure(&self, c: [f64; 2], t0: f64, t1: f64) -> (f64, f64);

    fn speed(&self, theta: f64) -> f64 {
        let v = self.velocity(theta);
        v[0].hypot(v[1])
    }

    /// Unsigned curvature from a central difference of the velocity.
    fn curvature(&self, theta: f64) -> f64 {
        let h = 1e-5;
        let v = self.velocity(theta);
        let vp = self.velocity(theta + h);
        let vm = self.velocity(theta - h);
        let a = [(vp[0] - vm[0]) / (2.0 * h), (vp[1] - vm[1]) / (2.0 * h)];
        let cross = v[0] * a[1] - v[1] * a[0];
        cross.abs() / v[0].hypot(v[1]).powi(3)
    }
}

/// Range of cos on [a, b].
pub(crate) fn cos_range(a: f64, b: f64) -> (f64, f64) {
    if b - a >= TAU {
        return (-1.0, 1.0);
    }
    let (ca, cb) = (a.cos(), b.cos());
    let mut lo = ca.min(cb);
    let mut hi = ca.max(cb);
    if (a / TAU).ceil() <= (b / TAU).floor() {
        hi = 1.0;
    }
    if ((a - PI) / TAU).ceil() <= ((b - PI) / TAU).floor() {
        lo = -1.0;
    }
    (lo, hi)
}

pub(crate) fn sin_range(a: f64, b: f64) -> (f64, f64) {
    cos_range(a - 0.5 * PI, b - 0.5 * PI)
}

/// Bounds on sqrt(r² + |c|² − 2 r |c| k) for r in `r` and k in `k` (k is a cosine).
pub(crate) fn polar_distance_range(r: (f64, f64), c_norm: f64, k: (f64, f64)) -> (f64, f64) {
    if c_norm == 0.0 {
        return r;
    }
    let g = |rr: f64, kk: f64| (rr * rr + c_norm * c_norm - 2.0 * rr * c_norm * kk).max(0.0);
    let r_star = (c_norm * k.1).clamp(r.0, r.1);
    let lo = g(r_star, k.1);
    let hi = g(r.0, k.0).max(g(r.1, k.0));
    (lo.sqrt(), hi.sqrt())
}

/// Slope of the distance to `c` on the unit circle over an angular cell.
pub(crate) fn circle_slope_range(c: [f64; 2], t0: f64, t1: f64, d: (f64, f64)) -> (f64, f64) {
    let cn = c[0].hypot(c[1]);
    if cn == 0.0 {
        return (0.0, 0.0);
    }
    let tc = c[1].atan2(c[0]);
    let (slo, shi) = sin_range(t0 - tc, t1 - tc);
    let (lo, hi) = if d.0 <= 0.0 {
        (if slo < 0.0 { -1.0 } else { 0.0 }, if shi > 0.0 { 1.0 } else { 0.0 })
    } else {
        let lo = if slo >= 0.0 { cn * slo / d.1 } else { cn * slo / d.0 };
        let hi = if shi >= 0.0 { cn * shi / d.0 } else { cn * shi / d.1 };
        (lo, hi)
    };
    (lo.max(-1.0), hi.min(1.0))
}

/// The unit circle with θ ↦ (cos θ, sin θ).
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitCircle;

impl ClosedCurve for UnitCircle {
    fn position(&self, theta: f64) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        [c, s]
    }

    fn velocity(&self, theta: f64) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        [-s, c]
    }

    fn length(&self) -> f64 {
        TAU
    }

    fn arclength_at(&self, theta: f64) -> f64 {
        theta
    }

    fn parameter_at(&self, s: f64) -> f64 {
        s
    }

    fn distance_enclosure(&self, c: [f64; 2], t0: f64, t1: f64) -> (f64, f64) {
        let cn = c[0].hypot(c[1]);
        let tc = c[1].atan2(c[0]);
        polar_distance_range((1.0, 1.0), cn, cos_range(t0 - tc, t1 - tc))
    }

    fn speed_enclosure(&self, _t0: f64, _t1: f64) -> (f64, f64) {
        (1.0, 1.0)
    }

    fn distance_slope_enclosure(&self, c: [f64; 2], t0: f64, t1: f64) -> (f64, f64) {
        let d = self.distance_enclosure(c, t0, t1);
        circle_slope_range(c, t0, t1, d)
    }

    fn curvature(&self, _theta: f64) -> f64 {
        1.0
    }
}
