//! A closed curve that coincides with the unit circle over a fat Cantor set.
//!
//! On θ ∈ [0, π/2] the curve is (1 + f(θ))(cos θ, sin θ) where f vanishes on a
//! Smith-Volterra-Cantor set C and is a positive bump on every removed interval.
//! On (π/2, 2π) it blends into a circle of radius 0.45 through the origin.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use super::curve::{cos_range, polar_distance_range, ClosedCurve};
use crate::error::{Error, Result};
use crate::quad;

const INNER_RADIUS: f64 = 0.45;
const BLEND_WIDTH: f64 = 0.5;
const TABLE_NODES: usize = 1 << 14;
const CELL_SAMPLES: usize = 8;

/// Construction parameters of the fat Cantor set and its bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatCantorCurveParams {
    pub depth: u32,
    /// Length of each removed middle interval at level n (1-based), on the unit interval.
    pub removed_lengths: Vec<f64>,
    pub bump_amplitude: f64,
}

impl FatCantorCurveParams {
    /// Removes intervals of length 4^{-n} at level n.
    pub fn smith_volterra(depth: u32, bump_amplitude: f64) -> Self {
        FatCantorCurveParams {
            depth,
            removed_lengths: (1..=depth).map(|n| 0.25f64.powi(n as i32)).collect(),
            bump_amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > 20 {
            return Err(Error::argument(format!("fat Cantor depth {} outside 1..=20", self.depth)));
        }
        if self.removed_lengths.len() != self.depth as usize {
            return Err(Error::argument("one removed length per level is required"));
        }
        if !(self.bump_amplitude > 0.0 && self.bump_amplitude <= 1.0) {
            return Err(Error::argument(format!("bump amplitude {} outside (0, 1]", self.bump_amplitude)));
        }
        let mut piece = 1.0;
        for (n, &len) in self.removed_lengths.iter().enumerate() {
            if !(len > 0.0 && len < piece) {
                return Err(Error::argument(format!(
                    "removed length {len} at level {} does not fit a remaining piece of length {piece}",
                    n + 1
                )));
            }
            piece = 0.5 * (piece - len);
        }
        Ok(())
    }

    /// Lebesgue measure of the retained set in θ.
    pub fn retained_measure(&self) -> f64 {
        let removed: f64 = self.removed_lengths.iter().enumerate().map(|(n, len)| 2f64.powi(n as i32) * len).sum();
        FRAC_PI_2 * (1.0 - removed)
    }
}

/// exp(-1/(1-s²)) on (-1, 1), zero outside.
fn bump_profile(s: f64) -> f64 {
    let q = (1.0 - s) * (1.0 + s);
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

fn bump_slope(s: f64) -> f64 {
    let q = (1.0 - s) * (1.0 + s);
    if q <= 0.0 {
        0.0
    } else {
        bump_profile(s) * (-2.0 * s / (q * q))
    }
}

fn smooth_step(x: f64) -> (f64, f64) {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let dpsi = |t: f64| if t > 0.0 { (-1.0 / t).exp() / (t * t) } else { 0.0 };
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = (psi(x), psi(1.0 - x));
    let den = a + b;
    (a / den, (dpsi(x) * b + a * dpsi(1.0 - x)) / (den * den))
}

#[derive(Debug, Clone, Copy)]
struct BumpRange {
    f: (f64, f64),
    df: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct FatCantorCurve {
    params: FatCantorCurveParams,
    removed: Vec<(f64, f64)>,
    retained: Vec<(f64, f64)>,
    table: Vec<f64>,
    length: f64,
    /// Location of the maximum of the bump slope on (-1, 0), stored as a positive number.
    slope_peak: f64,
    inner_speed_max: f64,
    inner_accel_max: f64,
}

impl FatCantorCurve {
    pub fn new(params: FatCantorCurveParams) -> Result<Self> {
        params.validate()?;
        let mut pieces = vec![(0.0f64, 1.0f64)];
        let mut removed = Vec::new();
        for &len in &params.removed_lengths {
            let mut next = Vec::with_capacity(2 * pieces.len());
            for &(l, r) in &pieces {
                let mid = 0.5 * (l + r);
                let (a, b) = (mid - 0.5 * len, mid + 0.5 * len);
                removed.push((a * FRAC_PI_2, b * FRAC_PI_2));
                next.push((l, a));
                next.push((b, r));
            }
            pieces = next;
        }
        removed.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));
        let retained = pieces.iter().map(|&(l, r)| (l * FRAC_PI_2, r * FRAC_PI_2)).collect();
        let (s_peak, _) = quad::golden_max(|s| bump_slope(-s), 1e-9, 1.0 - 1e-9, 200);
        let mut curve = FatCantorCurve {
            params,
            removed,
            retained,
            table: Vec::new(),
            length: 0.0,
            slope_peak: s_peak,
            inner_speed_max: 0.0,
            inner_accel_max: 0.0,
        };
        curve.fill_inner_bounds();
        curve.fill_table();
        Ok(curve)
    }

    pub fn params(&self) -> &FatCantorCurveParams {
        &self.params
    }

    /// Removed open intervals in θ, sorted.
    pub fn removed_intervals(&self) -> &[(f64, f64)] {
        &self.removed
    }

    /// Retained closed intervals in θ whose union is C.
    pub fn retained_intervals(&self) -> &[(f64, f64)] {
        &self.retained
    }

    /// Arclength of the image of C, integrated piece by piece.
    pub fn retained_arclength(&self) -> f64 {
        self.retained.iter().map(|&(a, b)| quad::adaptive_gauss_kronrod(|t| self.speed(t), a, b, 1e-14, 20).value).sum()
    }

    fn removed_containing(&self, theta: f64) -> Option<(f64, f64)> {
        let idx = self.removed.partition_point(|iv| iv.0 < theta);
        if idx == 0 {
            return None;
        }
        let iv = self.removed[idx - 1];
        (theta < iv.1).then_some(iv)
    }

    /// f(θ) on [0, π/2]; zero exactly on C.
    pub fn bump(&self, theta: f64) -> f64 {
        match self.removed_containing(theta) {
            Some((a, b)) => {
                let w = b - a;
                self.params.bump_amplitude * w * w * bump_profile((2.0 * theta - a - b) / w)
            }
            None => 0.0,
        }
    }

    fn bump_derivative(&self, theta: f64) -> f64 {
        match self.removed_containing(theta) {
            Some((a, b)) => {
                let w = b - a;
                2.0 * self.params.bump_amplitude * w * bump_slope((2.0 * theta - a - b) / w)
            }
            None => 0.0,
        }
    }

    /// Distance from the origin on the outer arc θ ∈ [0, π/2].
    pub fn radius(&self, theta: f64) -> f64 {
        1.0 + self.bump(theta)
    }

    pub fn in_retained_set(&self, theta: f64) -> bool {
        (0.0..=FRAC_PI_2).contains(&theta) && self.removed_containing(theta).is_none()
    }

    fn blend(theta: f64) -> (f64, f64) {
        if theta < FRAC_PI_2 + BLEND_WIDTH {
            let (s, ds) = smooth_step((theta - FRAC_PI_2) / BLEND_WIDTH);
            (s, ds / BLEND_WIDTH)
        } else if theta > TAU - BLEND_WIDTH {
            let (s, ds) = smooth_step((TAU - theta) / BLEND_WIDTH);
            (s, -ds / BLEND_WIDTH)
        } else {
            (1.0, 0.0)
        }
    }

    fn wrap(theta: f64) -> f64 {
        let t = theta.rem_euclid(TAU);
        if t >= TAU {
            0.0
        } else {
            t
        }
    }

    /// Exact range of f and f' over [t0, t1] ⊂ [0, π/2].
    fn bump_range(&self, t0: f64, t1: f64) -> BumpRange {
        let amp = self.params.bump_amplitude;
        let mut f = (f64::INFINITY, f64::NEG_INFINITY);
        let mut df = (f64::INFINITY, f64::NEG_INFINITY);
        let mut include = |lo: f64, hi: f64, dlo: f64, dhi: f64| {
            f = (f.0.min(lo), f.1.max(hi));
            df = (df.0.min(dlo), df.1.max(dhi));
        };
        let mut covered = false;
        let start = self.removed.partition_point(|iv| iv.1 <= t0);
        for &(a, b) in &self.removed[start..] {
            if a >= t1 {
                break;
            }
            if a < t0 && t1 < b {
                covered = true;
            }
            let w = b - a;
            let s0 = ((2.0 * t0.max(a) - a - b) / w).max(-1.0);
            let s1 = ((2.0 * t1.min(b) - a - b) / w).min(1.0);
            let (b0, b1) = (bump_profile(s0), bump_profile(s1));
            let hi = if s0 <= 0.0 && s1 >= 0.0 { bump_profile(0.0) } else { b0.max(b1) };
            let lo = b0.min(b1);
            let mut dlo = bump_slope(s0).min(bump_slope(s1));
            let mut dhi = bump_slope(s0).max(bump_slope(s1));
            for s in [-self.slope_peak, self.slope_peak] {
                if s0 <= s && s <= s1 {
                    let v = bump_slope(s);
                    dlo = dlo.min(v);
                    dhi = dhi.max(v);
                }
            }
            include(amp * w * w * lo, amp * w * w * hi, 2.0 * amp * w * dlo, 2.0 * amp * w * dhi);
        }
        if !covered {
            include(0.0, 0.0, 0.0, 0.0);
        }
        BumpRange { f, df }
    }

    fn fill_inner_bounds(&mut self) {
        let n = 20_000;
        let (a, b) = (FRAC_PI_2, TAU);
        let h = 1e-6;
        let mut smax: f64 = 0.0;
        let mut amax: f64 = 0.0;
        for k in 0..=n {
            let t = a + (b - a) * k as f64 / n as f64;
            let v = self.velocity(t);
            smax = smax.max(v[0].hypot(v[1]));
            let (tp, tm) = ((t + h).min(b), (t - h).max(a));
            let vp = self.velocity(tp);
            let vm = self.velocity(tm);
            let acc = ((vp[0] - vm[0]) / (tp - tm)).hypot((vp[1] - vm[1]) / (tp - tm));
            amax = amax.max(acc);
        }
        self.inner_speed_max = smax * 1.05 + 1e-9;
        self.inner_accel_max = amax * 1.25 + 1e-6;
    }

    fn breakpoints_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        if t0 < FRAC_PI_2 {
            let start = self.removed.partition_point(|iv| iv.1 <= t0);
            for &(a, b) in &self.removed[start..] {
                if a >= t1 {
                    break;
                }
                pts.push(a);
                pts.push(b);
            }
        }
        pts.extend([FRAC_PI_2, FRAC_PI_2 + BLEND_WIDTH, TAU - BLEND_WIDTH]);
        pts
    }

    fn segment_length(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let bp = self.breakpoints_in(t0, t1);
        quad::integrate_pieces(|t| self.speed(t), t0, t1, &bp, 1e-15 * (t1 - t0).max(1e-300)).value
    }

    fn fill_table(&mut self) {
        let h = TAU / TABLE_NODES as f64;
        let mut table = Vec::with_capacity(TABLE_NODES + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 0..TABLE_NODES {
            acc += self.segment_length(k as f64 * h, (k + 1) as f64 * h);
            table.push(acc);
        }
        self.length = acc;
        self.table = table;
    }

    fn inner_distance_enclosure(&self, c: [f64; 2], t0: f64, t1: f64) -> (f64, f64) {
        let dist = |t: f64| {
            let p = self.position(t);
            (p[0] - c[0]).hypot(p[1] - c[1])
        };
        let step = (t1 - t0) / CELL_SAMPLES as f64;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut prev = dist(t0);
        for k in 1..=CELL_SAMPLES {
            let t = if k == CELL_SAMPLES { t1 } else { t0 + step * k as f64 };
            let cur = dist(t);
            let (mn, mx) = (prev.min(cur), prev.max(cur));
            // Lipschitz padding: distance moves no faster than the curve.
            let lip = 0.5 * self.inner_speed_max * step;
            let (mut plo, mut phi) = ((mn - lip).max(0.0), mx + lip);
            if plo > 0.0 {
                // Second-derivative padding away from the singular point.
                let m2 = (self.inner_speed_max.powi(2) + phi * self.inner_accel_max) / plo;
                let pad = m2 * step * step / 8.0;
                plo = plo.max(mn - pad);
                phi = phi.min(mx + pad);
            }
            lo = lo.min(plo);
            hi = hi.max(phi);
            prev = cur;
        }
        (lo, hi)
    }

    fn split<F: FnMut(f64, f64, bool) -> (f64, f64)>(t0: f64, t1: f64, mut part: F) -> (f64, f64) {
        if t1 <= FRAC_PI_2 {
            part(t0, t1, true)
        } else if t0 >= FRAC_PI_2 {
            part(t0, t1, false)
        } else {
            let a = part(t0, FRAC_PI_2, true);
            let b = part(FRAC_PI_2, t1, false);
            (a.0.min(b.0), a.1.max(b.1))
        }
    }
}

impl ClosedCurve for FatCantorCurve {
    fn position(&self, theta: f64) -> [f64; 2] {
        let t = Self::wrap(theta);
        let (s, c) = t.sin_cos();
        if t <= FRAC_PI_2 {
            let r = self.radius(t);
            [r * c, r * s]
        } else {
            let (phi, _) = Self::blend(t);
            let k = 1.0 - phi * (1.0 - INNER_RADIUS);
            [k * c + phi * INNER_RADIUS, k * s]
        }
    }

    fn velocity(&self, theta: f64) -> [f64; 2] {
        let t = Self::wrap(theta);
        let (s, c) = t.sin_cos();
        if t <= FRAC_PI_2 {
            let r = self.radius(t);
            let df = self.bump_derivative(t);
            [df * c - r * s, df * s + r * c]
        } else {
            let (phi, dphi) = Self::blend(t);
            let k = 1.0 - phi * (1.0 - INNER_RADIUS);
            let dk = -dphi * (1.0 - INNER_RADIUS);
            [dk * c - k * s + dphi * INNER_RADIUS, dk * s + k * c]
        }
    }

    fn length(&self) -> f64 {
        self.length
    }

    fn arclength_at(&self, theta: f64) -> f64 {
        if theta >= TAU {
            return self.length;
        }
        let h = TAU / TABLE_NODES as f64;
        let k = ((theta / h).floor() as usize).min(TABLE_NODES - 1);
        self.table[k] + self.segment_length(k as f64 * h, theta)
    }

    fn parameter_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length);
        let k = self.table.partition_point(|&v| v <= s).clamp(1, TABLE_NODES) - 1;
        let h = TAU / TABLE_NODES as f64;
        let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
        let span = self.table[k + 1] - self.table[k];
        let mut t = lo + h * ((s - self.table[k]) / span).clamp(0.0, 1.0);
        for _ in 0..4 {
            let err = self.table[k] + self.segment_length(lo, t) - s;
            t = (t - err / self.speed(t)).clamp(lo, hi);
            if err.abs() < 1e-15 {
                break;
            }
        }
        t
    }

    fn distance_enclosure(&self, c: [f64; 2], t0: f64, t1: f64) -> (f64, f64) {
        let cn = c[0].hypot(c[1]);
        let tc = c[1].atan2(c[0]);
        Self::split(t0, t1, |a, b, polar| {
            if polar {
                let r = self.bump_range(a, b).f;
                polar_distance_range((1.0 + r.0, 1.0 + r.1), cn, cos_range(a - tc, b - tc))
            } else {
                self.inner_distance_enclosure(c, a, b)
            }
        })
    }

    fn speed_enclosure(&self, t0: f64, t1: f64) -> (f64, f64) {
        Self::split(t0, t1, |a, b, polar| {
            if polar {
                let br = self.bump_range(a, b);
                let (dlo, dhi) = br.df;
                let min_abs = if dlo <= 0.0 && dhi >= 0.0 { 0.0 } else { dlo.abs().min(dhi.abs()) };
                let max_abs = dlo.abs().max(dhi.abs());
                (min_abs.hypot(1.0 + br.f.0), max_abs.hypot(1.0 + br.f.1))
            } else {
                let step = (b - a) / CELL_SAMPLES as f64;
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for k in 0..=CELL_SAMPLES {
                    let v = self.speed(a + step * k as f64);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let pad = 0.5 * self.inner_accel_max * step;
                ((lo - pad).max(0.0), hi + pad)
            }
        })
    }

    fn distance_slope_enclosure(&self, c: [f64; 2], t0: f64, t1: f64) -> (f64, f64) {
        let cn = c[0].hypot(c[1]);
        Self::split(t0, t1, |a, b, polar| {
            if polar && cn == 0.0 {
                return self.bump_range(a, b).df;
            }
            let step = (b - a) / CELL_SAMPLES as f64;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for k in 0..=CELL_SAMPLES {
                let t = a + step * k as f64;
                let p = self.position(t);
                let v = self.velocity(t);
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                let d = dx.hypot(dy);
                let slope = if d > 0.0 { (dx * v[0] + dy * v[1]) / d } else { 0.0 };
                lo = lo.min(slope);
                hi = hi.max(slope);
            }
            (lo, hi)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(depth: u32) -> FatCantorCurve {
        FatCantorCurve::new(FatCantorCurveParams::smith_volterra(depth, 0.05)).unwrap()
    }

    #[test]
    fn retained_measure_formula() {
        let p = FatCantorCurveParams::smith_volterra(8, 0.05);
        let expected = FRAC_PI_2 * (0.5 + 2f64.powi(-9));
        assert!((p.retained_measure() - expected).abs() < 1e-14);
        let c = FatCantorCurve::new(p).unwrap();
        let total: f64 = c.retained_intervals().iter().map(|(a, b)| b - a).sum();
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn bump_zero_on_set_and_positive_on_gaps() {
        let c = curve(6);
        for &(a, b) in c.retained_intervals() {
            assert_eq!(c.bump(a), 0.0);
            assert_eq!(c.bump(0.5 * (a + b)), 0.0);
            assert_eq!(c.radius(0.5 * (a + b)), 1.0);
        }
        for &(a, b) in c.removed_intervals() {
            assert!(c.bump(0.5 * (a + b)) > 0.0);
        }
    }

    #[test]
    fn deep_bumps_still_lift_the_radius() {
        let c = curve(11);
        for &(a, b) in c.removed_intervals() {
            assert!(c.radius(0.5 * (a + b)) > 1.0);
        }
    }

    #[test]
    fn closes_smoothly() {
        let c = curve(5);
        let p0 = c.position(0.0);
        let p1 = c.position(TAU - 1e-12);
        assert!((p0[0] - p1[0]).abs() < 1e-9 && (p0[1] - p1[1]).abs() < 1e-9);
        let h = 1e-5;
        let fd0 =
            [(c.position(h)[0] - c.position(-h)[0]) / (2.0 * h), (c.position(h)[1] - c.position(-h)[1]) / (2.0 * h)];
        let v = c.velocity(0.0);
        assert!((fd0[0] - v[0]).abs() < 1e-6 && (fd0[1] - v[1]).abs() < 1e-6);
    }

    #[test]
    fn passes_through_origin() {
        let c = curve(4);
        let p = c.position(std::f64::consts::PI);
        assert!(p[0].abs() < 1e-15 && p[1].abs() < 1e-15);
    }

    #[test]
    fn velocity_matches_finite_differences() {
        let c = curve(4);
        let h = 1e-6;
        for k in 0..200 {
            let t = 0.013 + k as f64 * 0.031;
            let pp = c.position(t + h);
            let pm = c.position(t - h);
            let v = c.velocity(t);
            assert!(((pp[0] - pm[0]) / (2.0 * h) - v[0]).abs() < 1e-5, "t={t}");
            assert!(((pp[1] - pm[1]) / (2.0 * h) - v[1]).abs() < 1e-5, "t={t}");
        }
    }

    #[test]
    fn speed_never_vanishes_and_curve_is_simple() {
        let c = curve(4);
        let n = 2000;
        let pts: Vec<[f64; 2]> = (0..n).map(|k| c.position(TAU * k as f64 / n as f64)).collect();
        for k in 0..n {
            assert!(c.speed(TAU * k as f64 / n as f64) > 0.2);
        }
        for i in 0..n {
            for j in (i + 40)..n {
                if i + n - j < 40 {
                    continue;
                }
                let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
                assert!(d > 1e-3, "self-approach at {i},{j}");
            }
        }
    }

    #[test]
    fn arclength_roundtrip() {
        let c = curve(6);
        for k in 1..50 {
            let t = TAU * k as f64 / 50.0 - 0.01;
            let s = c.arclength_at(t);
            assert!((c.parameter_at(s) - t).abs() < 1e-10);
        }
    }

    #[test]
    fn arclength_matches_trapezoid() {
        let c = curve(5);
        let n = 1 << 18;
        let h = TAU / n as f64;
        let trap: f64 = (0..n).map(|k| c.speed(k as f64 * h)).sum::<f64>() * h;
        assert!((trap - c.length()).abs() / c.length() < 1e-7);
    }

    #[test]
    fn enclosures_bracket_samples() {
        let c = curve(7);
        for &center in &[[0.0, 0.0], [0.3, 0.1]] {
            for k in 0..300 {
                let t0 = TAU * k as f64 / 300.0;
                let t1 = t0 + TAU / 300.0;
                let (lo, hi) = c.distance_enclosure(center, t0, t1);
                let (slo, shi) = c.speed_enclosure(t0, t1);
                for j in 0..=20 {
                    let t = t0 + (t1 - t0) * j as f64 / 20.0;
                    let p = c.position(t);
                    let d = (p[0] - center[0]).hypot(p[1] - center[1]);
                    assert!(d >= lo - 1e-12 && d <= hi + 1e-12, "distance at {t}");
                    let s = c.speed(t);
                    assert!(s >= slo - 1e-12 && s <= shi + 1e-12, "speed at {t}");
                }
            }
        }
    }
}
