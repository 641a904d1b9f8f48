//! Radial profiles t ↦ K(t) on t ≥ 0 and their exact oscillation ranges.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

/// Closed range of values attained by a profile on an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub lo: f64,
    pub hi: f64,
}

impl ValueRange {
    pub fn point(v: f64) -> Self {
        ValueRange { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn include(&mut self, v: f64) {
        self.lo = self.lo.min(v);
        self.hi = self.hi.max(v);
    }

    pub fn union(self, other: ValueRange) -> ValueRange {
        ValueRange { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn scale(self, c: f64) -> ValueRange {
        if c >= 0.0 {
            ValueRange { lo: self.lo * c, hi: self.hi * c }
        } else {
            ValueRange { lo: self.hi * c, hi: self.lo * c }
        }
    }

    fn empty() -> Self {
        ValueRange { lo: f64::INFINITY, hi: f64::NEG_INFINITY }
    }
}

/// c · χ_[a, b](t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLevel {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// Σ c_j χ_[a_j, b_j](t) with closed intervals.
    Step(Vec<StepLevel>),
    /// 1/3 on [0,1) ∪ (1, 3/2], 1/t² at positive integers, 0 elsewhere.
    Cantor,
    /// sin(exp(exp(1/t))) on (0, 1], 0 at t = 0 and beyond 1.
    Irregular,
    /// 1 − b t² on [0, 1].
    TruncatedQuadratic { b: f64 },
    /// 1 − a + a cos(ε s) for ε s < arccos(1 − ε²/2).
    LleCosine { a: f64, eps: f64 },
    /// exp(−t²) on [0, cutoff].
    TruncatedGaussian { cutoff: f64 },
}

/// Phases above this carry no usable information in double precision.
const PHASE_LIMIT: f64 = 1e12;

/// exp(exp(1/t)), infinite once it overflows.
pub fn irregular_phase(t: f64) -> f64 {
    (1.0 / t).exp().exp()
}

/// |d/dt exp(exp(1/t))|.
pub fn irregular_phase_slope(t: f64) -> f64 {
    let e = (1.0 / t).exp();
    e.exp() * e / (t * t)
}

/// Parameter where exp(exp(1/t)) = phase.
pub fn irregular_time_at_phase(phase: f64) -> f64 {
    1.0 / phase.ln().ln()
}

/// Radius of the LLE cap in geodesic distance.
pub fn lle_cap_radius(eps: f64) -> f64 {
    (1.0 - 0.5 * eps * eps).acos()
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            Profile::Step(levels) => levels.iter().filter(|l| l.a <= t && t <= l.b).map(|l| l.c).sum(),
            Profile::Cantor => {
                if t < 1.0 || (t > 1.0 && t <= 1.5) {
                    1.0 / 3.0
                } else if t >= 1.0 && t.fract() == 0.0 {
                    1.0 / (t * t)
                } else {
                    0.0
                }
            }
            Profile::Irregular => {
                if t == 0.0 || t > 1.0 {
                    0.0
                } else {
                    let phase = irregular_phase(t);
                    if phase.is_finite() {
                        phase.sin()
                    } else {
                        0.0
                    }
                }
            }
            Profile::TruncatedQuadratic { b } => {
                if t <= 1.0 {
                    1.0 - b * t * t
                } else {
                    0.0
                }
            }
            Profile::LleCosine { a, eps } => {
                let s = eps * t;
                if s < lle_cap_radius(*eps) {
                    1.0 - a + a * s.cos()
                } else {
                    0.0
                }
            }
            Profile::TruncatedGaussian { cutoff } => {
                if t <= *cutoff {
                    (-t * t).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius beyond which the profile vanishes almost everywhere.
    pub fn support_radius(&self) -> f64 {
        match self {
            Profile::Step(levels) => levels.iter().map(|l| l.b).fold(0.0, f64::max),
            Profile::Cantor => 1.5,
            Profile::Irregular | Profile::TruncatedQuadratic { .. } => 1.0,
            Profile::LleCosine { eps, .. } => lle_cap_radius(*eps) / eps,
            Profile::TruncatedGaussian { cutoff } => *cutoff,
        }
    }

    /// Polynomial decay exponent for profiles that are not compactly supported.
    pub fn decay_exponent(&self) -> Option<f64> {
        match self {
            Profile::Cantor => Some(2.0),
            _ => None,
        }
    }

    /// Discontinuities and kinks on (0, ∞) relevant to quadrature.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Step(levels) => {
                let mut v: Vec<f64> = levels.iter().flat_map(|l| [l.a, l.b]).filter(|&t| t > 0.0).collect();
                v.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                v.dedup();
                v
            }
            Profile::Cantor => vec![1.0, 1.5],
            _ => vec![self.support_radius()],
        }
    }

    /// Smallest t at which the profile is numerically resolvable, if any.
    pub fn resolution_floor(&self) -> Option<f64> {
        match self {
            Profile::Irregular => Some(irregular_time_at_phase(PHASE_LIMIT)),
            _ => None,
        }
    }

    /// Exact range of the profile on the closed interval [t0, t1] ⊂ [0, ∞).
    /// For the irregular profile the range is conservative.
    pub fn range_on(&self, t0: f64, t1: f64) -> ValueRange {
        debug_assert!(t0 <= t1);
        let (t0, t1) = (t0.max(0.0), t1.max(0.0));
        match self {
            Profile::Step(levels) => {
                let mut pts: Vec<f64> = levels.iter().flat_map(|l| [l.a, l.b]).filter(|&p| p > t0 && p < t1).collect();
                pts.push(t0);
                pts.push(t1);
                pts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                pts.dedup();
                let mut r = ValueRange::empty();
                for w in pts.windows(2) {
                    r.include(self.eval(0.5 * (w[0] + w[1])));
                }
                for &p in &pts {
                    r.include(self.eval(p));
                }
                r
            }
            Profile::Cantor => cantor_range(t0, t1),
            Profile::Irregular => irregular_range(t0, t1),
            Profile::TruncatedQuadratic { .. } | Profile::TruncatedGaussian { .. } => {
                let edge = self.support_radius();
                if t0 > edge {
                    return ValueRange::point(0.0);
                }
                let mut r = ValueRange::point(self.eval(t0));
                r.include(self.eval(t1.min(edge)));
                if t1 > edge {
                    r.include(0.0);
                }
                r
            }
            Profile::LleCosine { .. } => {
                let edge = self.support_radius();
                let mut r = ValueRange::point(self.eval(t0));
                if t1 >= edge {
                    r.include(0.0);
                    if t0 < edge {
                        // Supremum or infimum approached at the open edge.
                        r.include(self.eval(edge * (1.0 - 1e-15)));
                    }
                } else {
                    r.include(self.eval(t1));
                }
                r
            }
        }
    }
}

fn cantor_range(t0: f64, t1: f64) -> ValueRange {
    let mut r = ValueRange::empty();
    if t0 == t1 {
        return ValueRange::point(Profile::Cantor.eval(t0));
    }
    if t0 < 1.0 || (t1 > 1.0 && t0 < 1.5) || (t0 == 1.5) {
        r.include(1.0 / 3.0);
    }
    if t0 <= 1.0 && 1.0 <= t1 {
        r.include(1.0);
    }
    let first = t0.ceil().max(2.0);
    if first <= t1 {
        r.include(1.0 / (first * first));
        let last = t1.floor();
        r.include(1.0 / (last * last));
    }
    if t1 > 1.5 {
        r.include(0.0);
    }
    r
}

fn irregular_range(t0: f64, t1: f64) -> ValueRange {
    let mut r = ValueRange::empty();
    if t1 > 1.0 {
        r.include(0.0);
    }
    if t0 == 0.0 {
        r.include(0.0);
        if t1 > 0.0 {
            r.include(-1.0);
            r.include(1.0);
        }
        return r;
    }
    if t0 > 1.0 {
        return r;
    }
    let hi_t = t1.min(1.0);
    let p_hi = irregular_phase(t0);
    let p_lo = irregular_phase(hi_t);
    if !(p_hi <= PHASE_LIMIT) {
        r.include(-1.0);
        r.include(1.0);
        return r;
    }
    // Rounding in exp(exp(1/t)) grows with the inner exponent.
    let slack = |p: f64, t: f64| p * ((1.0 / t).exp() / t + 2.0) * 8.0 * f64::EPSILON;
    let a = p_lo - slack(p_lo, hi_t);
    let b = p_hi + slack(p_hi, t0);
    if b - a >= TAU {
        r.include(-1.0);
        r.include(1.0);
        return r;
    }
    r.include(p_lo.sin());
    r.include(p_hi.sin());
    let contains = |offset: f64| ((a - offset) / TAU).ceil() <= ((b - offset) / TAU).floor();
    if contains(FRAC_PI_2) {
        r.include(1.0);
    }
    if contains(PI + FRAC_PI_2) {
        r.include(-1.0);
    }
    if a != p_lo || b != p_hi {
        // Endpoint values are uncertain by the slack.
        let spread = (b - a) - (p_hi - p_lo);
        r.lo = (r.lo - spread).max(-1.0);
        r.hi = (r.hi + spread).min(1.0);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled_within(p: &Profile, t0: f64, t1: f64) {
        let r = p.range_on(t0, t1);
        for k in 0..=400 {
            let t = t0 + (t1 - t0) * k as f64 / 400.0;
            let v = p.eval(t);
            assert!(v >= r.lo - 1e-15 && v <= r.hi + 1e-15, "{p:?} at {t}: {v} not in {r:?}");
        }
    }

    #[test]
    fn cantor_values() {
        assert_eq!(Profile::Cantor.eval(0.5), 1.0 / 3.0);
        assert_eq!(Profile::Cantor.eval(1.0), 1.0);
        assert_eq!(Profile::Cantor.eval(2.0), 0.25);
        assert_eq!(Profile::Cantor.eval(1.7), 0.0);
    }

    #[test]
    fn cantor_jumps() {
        let r = Profile::Cantor.range_on(0.9, 1.1);
        assert_eq!((r.lo, r.hi), (1.0 / 3.0, 1.0));
        let r = Profile::Cantor.range_on(2.8, 3.2);
        assert_eq!((r.lo, r.hi), (0.0, 1.0 / 9.0));
        let r = Profile::Cantor.range_on(0.2, 0.6);
        assert_eq!(r.width(), 0.0);
    }

    #[test]
    fn ranges_bracket_samples() {
        let profiles = [
            Profile::Step(vec![StepLevel { c: 2.0, a: 0.0, b: 0.5 }, StepLevel { c: -1.0, a: 0.5, b: 1.0 }]),
            Profile::Cantor,
            Profile::TruncatedQuadratic { b: 1.3 },
            Profile::LleCosine { a: 1.0, eps: 0.5 },
            Profile::TruncatedGaussian { cutoff: 3.0 },
            Profile::Irregular,
        ];
        for p in &profiles {
            for &(t0, t1) in
                &[(0.0, 0.3), (0.31, 0.33), (0.45, 0.47), (0.8, 1.2), (0.999, 1.001), (1.4, 3.1), (0.6, 0.6)]
            {
                sampled_within(p, t0, t1);
            }
        }
    }

    #[test]
    fn ranges_vanish_beyond_the_support() {
        let profiles = [
            Profile::Step(vec![StepLevel { c: 2.0, a: 0.0, b: 0.5 }]),
            Profile::TruncatedQuadratic { b: 0.125 },
            Profile::LleCosine { a: 1.0, eps: 0.5 },
            Profile::TruncatedGaussian { cutoff: 3.0 },
            Profile::Irregular,
        ];
        for p in &profiles {
            let edge = p.support_radius();
            assert_eq!(p.range_on(edge + 0.01, edge + 0.5), ValueRange::point(0.0), "{p:?}");
        }
    }

    #[test]
    fn irregular_sign_changes() {
        let n = 200_000;
        let mut changes = 0;
        let mut prev = Profile::Irregular.eval(0.4);
        for k in 1..=n {
            let v = Profile::Irregular.eval(0.4 + 0.1 * k as f64 / n as f64);
            if v * prev < 0.0 {
                changes += 1;
            }
            prev = v;
        }
        assert!(changes > 10, "only {changes} sign changes");
    }

    #[test]
    fn irregular_zero_crossings() {
        for k in [5.0f64, 100.0, 10_000.0] {
            let t = irregular_time_at_phase(k * PI);
            assert!(Profile::Irregular.eval(t).abs() < 1e-6 * k);
        }
    }

    #[test]
    fn lle_cap() {
        assert!((lle_cap_radius(1.0) - PI / 3.0).abs() < 1e-15);
    }
}
