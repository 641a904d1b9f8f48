//! L²(P) distances between kernel translates on [0, 1], greedy packings and the non-VC witness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::kernels::{self, irregular_phase, irregular_phase_slope, irregular_time_at_phase, IsotropicKernel, Profile};
use crate::quad;

/// Phases up to this are integrated piece by piece between zeros.
const RESOLVED_PHASE: f64 = 1e4;
/// Coarser cutoff used for the per-candidate projections in the packing search.
const PROJECTION_PHASE: f64 = 1e3;
const PROJECTION_BINS: usize = 512;

/// A function on R whose translates z ↦ K(z − a) form the family.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeKernel {
    /// t ↦ K(|t|) for a radial profile.
    Even(IsotropicKernel),
    /// value · χ_[lo, hi](t).
    Window {
        lo: f64,
        hi: f64,
        value: f64,
    },
    Constant(f64),
}

impl ProbeKernel {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ProbeKernel::Even(k) => k.eval(t.abs()),
            ProbeKernel::Window { lo, hi, value } => {
                if *lo <= t && t <= *hi {
                    *value
                } else {
                    0.0
                }
            }
            ProbeKernel::Constant(c) => *c,
        }
    }

    fn is_irregular(&self) -> bool {
        matches!(self, ProbeKernel::Even(k) if matches!(k.profile(), Profile::Irregular))
    }
}

/// The family {K(· − a) : a ∈ [0, 1]} under the uniform measure on [0, 1].
#[derive(Debug, Clone)]
pub struct CoveringProbe {
    kernel: ProbeKernel,
    /// |t| below which the irregular kernel is not resolved; zero otherwise.
    chaos_radius: f64,
    /// Zeros of the irregular kernel in t ∈ [chaos_radius, 1], ascending.
    zeros: Vec<f64>,
}

impl CoveringProbe {
    pub fn new(kernel: ProbeKernel) -> Self {
        let (chaos_radius, zeros) = if kernel.is_irregular() {
            let tau = irregular_time_at_phase(RESOLVED_PHASE);
            let k_lo = (irregular_phase(1.0) / std::f64::consts::PI).ceil() as u64;
            let k_hi = (RESOLVED_PHASE / std::f64::consts::PI).floor() as u64;
            let mut z: Vec<f64> =
                (k_lo..=k_hi).map(|k| irregular_time_at_phase(k as f64 * std::f64::consts::PI)).collect();
            z.reverse();
            (tau, z)
        } else {
            (0.0, Vec::new())
        };
        CoveringProbe { kernel, chaos_radius, zeros }
    }

    /// `irregular`, `cantor`, `step:c=..;a=..;b=..`, `window:lo=..,hi=..,c=..` or `const:c=..`.
    pub fn from_descriptor(raw: &str) -> Result<Self> {
        let desc = Descriptor::parse(raw)?;
        let cfg = |e: Error| match e {
            Error::Argument(m) => Error::config(format!("kernel `{raw}`: {m}")),
            other => other,
        };
        let kernel = match desc.name() {
            "irregular" => {
                desc.expect_keys(&[])?;
                ProbeKernel::Even(kernels::make_irregular_kernel())
            }
            "cantor" => {
                desc.expect_keys(&[])?;
                ProbeKernel::Even(kernels::make_cantor_example_kernel())
            }
            "step" => {
                desc.expect_keys(&["c", "a", "b"])?;
                let get = |k: &str| desc.list(k)?.ok_or_else(|| Error::config(format!("step kernel needs `{k}`")));
                let (c, a, b) = (get("c")?, get("a")?, get("b")?);
                if c.len() != a.len() || a.len() != b.len() {
                    return Err(Error::config("step kernel lists c, a, b differ in length"));
                }
                let levels: Vec<_> = (0..c.len()).map(|i| (c[i], a[i], b[i])).collect();
                ProbeKernel::Even(kernels::make_step_kernel(&levels).map_err(cfg)?)
            }
            "window" => {
                desc.expect_keys(&["lo", "hi", "c"])?;
                let lo = desc.f64_or("lo", 0.0)?;
                let hi = desc.f64_or("hi", 0.1)?;
                if !(lo <= hi) {
                    return Err(Error::config(format!("window [{lo}, {hi}] is empty")));
                }
                ProbeKernel::Window { lo, hi, value: desc.f64_or("c", 1.0)? }
            }
            "const" => {
                desc.expect_keys(&["c"])?;
                ProbeKernel::Constant(desc.f64_or("c", 1.0)?)
            }
            other => return Err(Error::config(format!("unknown probe kernel `{other}`"))),
        };
        Ok(Self::new(kernel))
    }

    pub fn kernel(&self) -> &ProbeKernel {
        &self.kernel
    }

    /// f_a(z) = K(z − a).
    pub fn translate(&self, a: f64, z: f64) -> f64 {
        self.kernel.eval(z - a)
    }

    /// Radius around a translate's center where the integrand is not resolved.
    pub fn chaos_radius(&self) -> f64 {
        self.chaos_radius
    }

    /// Points of (lo, hi) where f_a has jumps, kinks or (irregular kernel) zeros with |t| ≥ `floor`.
    fn breakpoints(&self, a: f64, lo: f64, hi: f64, floor: f64, out: &mut Vec<f64>) {
        let mut push = |z: f64| {
            if z > lo && z < hi {
                out.push(z);
            }
        };
        match &self.kernel {
            ProbeKernel::Even(k) => {
                push(a);
                let mut ts = k.profile().breakpoints();
                if k.is_compact() {
                    ts.push(k.support_radius());
                }
                for t in ts {
                    push(a - t);
                    push(a + t);
                }
                for &t in self.zeros.iter().filter(|t| **t >= floor) {
                    push(a - t);
                    push(a + t);
                }
            }
            ProbeKernel::Window { lo: wl, hi: wh, .. } => {
                push(a + wl);
                push(a + wh);
            }
            ProbeKernel::Constant(_) => {}
        }
    }
}

/// A distance with bounds. `lower` integrates only the resolved zones; `upper` charges the
/// unresolved zones the maximal integrand (2·sup|K|)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Splits [lo, hi] into sub-intervals by the given sorted cut points.
fn integrate_between(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cuts: &mut Vec<f64>) -> quad::Integral {
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = quad::Integral::ZERO;
    let mut prev = lo;
    for &c in cuts.iter().chain(std::iter::once(&hi)) {
        if c > prev {
            total = total + quad::adaptive_gauss_kronrod(&f, prev, c, 1e-13, 12);
            prev = c;
        }
    }
    total
}

/// [0, 1] minus the given open zones, as disjoint closed intervals.
fn complement(zones: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut z: Vec<(f64, f64)> = zones.iter().map(|&(a, b)| (a.max(0.0), b.min(1.0))).filter(|(a, b)| a < b).collect();
    z.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = Vec::new();
    let mut cur = 0.0;
    for (a, b) in z {
        if a > cur {
            out.push((cur, a));
        }
        cur = cur.max(b);
    }
    if cur < 1.0 {
        out.push((cur, 1.0));
    }
    out
}

/// (∫₀¹ (K(z − a) − K(z − b))² dz)^{1/2}.
pub fn l2_translate_distance(probe: &CoveringProbe, a: f64, b: f64) -> Result<Distance> {
    for v in [a, b] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::argument(format!("translate {v} outside [0, 1]")));
        }
    }
    if a == b {
        return Ok(Distance { estimate: 0.0, lower: 0.0, upper: 0.0 });
    }
    let tau = probe.chaos_radius;
    let diff2 = |z: f64| (probe.translate(a, z) - probe.translate(b, z)).powi(2);
    let mut resolved = quad::Integral::ZERO;
    let mut cuts = Vec::new();
    for (lo, hi) in complement(&[(a - tau, a + tau), (b - tau, b + tau)]) {
        cuts.clear();
        probe.breakpoints(a, lo, hi, tau, &mut cuts);
        probe.breakpoints(b, lo, hi, tau, &mut cuts);
        resolved = resolved + integrate_between(diff2, lo, hi, &mut cuts);
    }
    // Unresolved zones: sin² averages to 1/2 and cross terms to 0.
    let mut chaos_len = 0.0;
    let mut chaos_est = 0.0;
    if tau > 0.0 {
        let inside = |z: f64, c: f64| (z - c).abs() < tau;
        let mut edges = vec![0.0, 1.0, a - tau, a + tau, b - tau, b + tau];
        edges.retain(|e| (0.0..=1.0).contains(e));
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let (ca, cb) = (inside(mid, a), inside(mid, b));
            if !ca && !cb {
                continue;
            }
            chaos_len += hi - lo;
            chaos_est += match (ca, cb) {
                (true, true) => hi - lo,
                (true, false) | (false, true) => {
                    let other = if ca { b } else { a };
                    cuts.clear();
                    probe.breakpoints(other, lo, hi, tau, &mut cuts);
                    0.5 * (hi - lo) + integrate_between(|z| probe.translate(other, z).powi(2), lo, hi, &mut cuts).value
                }
                (false, false) => 0.0,
            };
        }
    }
    let slack = resolved.abs_error;
    let sup = kernel_sup(&probe.kernel);
    Ok(Distance {
        estimate: (resolved.value + chaos_est).max(0.0).sqrt(),
        lower: (resolved.value - slack).max(0.0).sqrt(),
        upper: (resolved.value + slack + 4.0 * sup * sup * chaos_len).max(0.0).sqrt(),
    })
}

fn kernel_sup(k: &ProbeKernel) -> f64 {
    match k {
        ProbeKernel::Even(k) => k.k_sup(),
        ProbeKernel::Window { value, .. } => value.abs(),
        ProbeKernel::Constant(c) => c.abs(),
    }
}

/// Enclosures of (1/√w) ∫_bin f_a over equal bins of [0, 1]; Bessel's inequality turns them into
/// lower bounds on pairwise distances.
#[derive(Debug, Clone)]
struct Projection {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn project(probe: &CoveringProbe, a: f64) -> Projection {
    let w = 1.0 / PROJECTION_BINS as f64;
    let floor = if probe.chaos_radius > 0.0 { irregular_time_at_phase(PROJECTION_PHASE) } else { 0.0 };
    let sup = kernel_sup(&probe.kernel);
    let scale = 1.0 / w.sqrt();
    let mut lo = Vec::with_capacity(PROJECTION_BINS);
    let mut hi = Vec::with_capacity(PROJECTION_BINS);
    let mut cuts = Vec::new();
    for j in 0..PROJECTION_BINS {
        let (u, v) = (j as f64 * w, (j + 1) as f64 * w);
        let mut value = 0.0;
        let mut slack = 1e-14;
        for (s, e) in complement(&[(a - floor, a + floor)]) {
            let (s, e) = (s.max(u), e.min(v));
            if s < e {
                cuts.clear();
                probe.breakpoints(a, s, e, floor, &mut cuts);
                let i = integrate_between(|z| probe.translate(a, z), s, e, &mut cuts);
                value += i.value;
                slack += 10.0 * i.abs_error;
            }
        }
        // Inside the floor the phase slope exceeds its value at the floor, so each monotone side
        // integrates to at most 3/slope (van der Corput).
        let chaotic = ((a + floor).min(v) - (a - floor).max(u)).max(0.0);
        if chaotic > 0.0 {
            slack += (sup * chaotic).min(2.0 * sup * 3.0 / irregular_phase_slope(floor));
        }
        lo.push((value - slack) * scale);
        hi.push((value + slack) * scale);
    }
    Projection { lo, hi }
}

fn projection_lower(p: &Projection, q: &Projection) -> f64 {
    let mut s = 0.0;
    for j in 0..p.lo.len() {
        let g = (p.lo[j] - q.hi[j]).max(q.lo[j] - p.hi[j]).max(0.0);
        s += g * g;
    }
    s.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub eps_metric: f64,
    /// Size of a set of translates with certified pairwise distances above `eps_metric`.
    pub count: usize,
    pub centers: Vec<f64>,
    pub candidates: usize,
    /// Set when fewer than 10/eps_metric candidates were used.
    pub coarse_grid: bool,
}

/// Sequential greedy packing over `grid` equally spaced translates. A candidate joins when its
/// certified lower distance to every member exceeds `eps_metric`; the count is a lower bound on
/// the packing number.
pub fn packing_number(probe: &CoveringProbe, eps_metric: f64, grid: usize) -> Result<PackingReport> {
    if !(eps_metric > 0.0) {
        return Err(Error::argument("packing radius must be positive"));
    }
    if grid < 2 {
        return Err(Error::argument("packing grid needs at least 2 candidates"));
    }
    let cands: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let projections: Vec<Projection> = cands.par_iter().map(|&a| project(probe, a)).collect();
    let mut members: Vec<usize> = Vec::new();
    for (i, &a) in cands.iter().enumerate() {
        let mut ok = true;
        // Most recent members first: they are the nearest translates and fail fastest.
        for &j in members.iter().rev() {
            if projection_lower(&projections[i], &projections[j]) > eps_metric {
                continue;
            }
            if certifies_separation(probe, cands[j], a, eps_metric)? {
                continue;
            }
            ok = false;
            break;
        }
        if ok {
            members.push(i);
        }
    }
    Ok(PackingReport {
        eps_metric,
        count: members.len(),
        centers: members.iter().map(|&i| cands[i]).collect(),
        candidates: grid,
        coarse_grid: (grid as f64) < 10.0 / eps_metric,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub delta: f64,
    pub a: f64,
    /// Certified lower bound on d(K(· − a), K(· − a − δ)).
    pub lhs: f64,
    pub estimate: f64,
    /// −1/(160 ln δ).
    pub rhs: f64,
    pub pass: bool,
}

/// Whether the resolved lower bound certifies d(f_a, f_b) > `eps`. For the irregular kernel each
/// resolved interval is walked outward from the chaos edge bordering it, where nearby translates
/// decorrelate first, and the walk stops as soon as the bound clears.
fn certifies_separation(probe: &CoveringProbe, a: f64, b: f64, eps: f64) -> Result<bool> {
    let tau = probe.chaos_radius;
    if tau == 0.0 || a == b {
        return Ok(l2_translate_distance(probe, a, b)?.lower > eps);
    }
    let target = eps * eps;
    let diff2 = |z: f64| (probe.translate(a, z) - probe.translate(b, z)).powi(2);
    let mut acc = 0.0;
    let mut add = |lo: f64, hi: f64| {
        let i = quad::adaptive_gauss_kronrod(diff2, lo.min(hi), lo.max(hi), 1e-12, 10);
        acc += i.value - 10.0 * i.abs_error;
        acc > target
    };
    for (lo, hi) in complement(&[(a - tau, a + tau), (b - tau, b + tau)]) {
        // (centre, direction) of the walk; the interval starts at that centre's chaos edge.
        let walk = [(a, 1.0, lo), (b, 1.0, lo), (a, -1.0, hi), (b, -1.0, hi)]
            .into_iter()
            .find(|&(c, dir, edge)| edge == c + dir * tau);
        let Some((c, dir, edge)) = walk else {
            if add(lo, hi) {
                return Ok(true);
            }
            continue;
        };
        let far = if dir > 0.0 { hi } else { lo };
        let mut prev = edge;
        for &t in &probe.zeros {
            let z = c + dir * t;
            if (z - far) * dir >= 0.0 {
                break;
            }
            if (z - prev) * dir > 0.0 {
                if add(prev, z) {
                    return Ok(true);
                }
                prev = z;
            }
        }
        if add(prev, far) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Compares translate distances at offset δ with −1/(160 ln δ) at `anchors` evenly spaced a with a + δ ≤ 1.
pub fn non_vc_witness(probe: &CoveringProbe, deltas: &[f64], anchors: usize) -> Result<Vec<WitnessRow>> {
    if anchors < 2 {
        return Err(Error::argument("the witness needs at least 2 anchors"));
    }
    let mut jobs = Vec::new();
    for &delta in deltas {
        if !(delta > 0.0 && delta <= 0.1) {
            return Err(Error::argument(format!("offset {delta} outside (0, 0.1]")));
        }
        for i in 0..anchors {
            jobs.push((delta, i as f64 * (1.0 - delta) / (anchors - 1) as f64));
        }
    }
    jobs.par_iter()
        .map(|&(delta, a)| {
            let d = l2_translate_distance(probe, a, a + delta)?;
            let rhs = -1.0 / (160.0 * delta.ln());
            Ok(WitnessRow { delta, a, lhs: d.lower, estimate: d.estimate, rhs, pass: d.lower > rhs })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(lo: f64, hi: f64) -> CoveringProbe {
        CoveringProbe::new(ProbeKernel::Window { lo, hi, value: 1.0 })
    }

    #[test]
    fn window_distances() {
        let d = l2_translate_distance(&window(0.0, 0.1), 0.0, 0.05).unwrap();
        assert!((d.estimate - 0.1f64.sqrt()).abs() < 1e-12);
        let d = l2_translate_distance(&window(-1.0, 1.0), 0.2, 0.3).unwrap();
        assert_eq!(d.estimate, 0.0);
        assert_eq!(l2_translate_distance(&window(0.0, 0.1), 0.4, 0.4).unwrap().upper, 0.0);
    }

    #[test]
    fn packing_examples() {
        let p = packing_number(&CoveringProbe::new(ProbeKernel::Constant(1.0)), 0.1, 100).unwrap();
        assert_eq!(p.count, 1);
        let p = packing_number(&window(0.0, 0.1), 0.1, 100).unwrap();
        assert!(p.count >= 9, "{p:?}");
        assert!(!p.coarse_grid);
    }

    #[test]
    fn witness_rhs() {
        let rows = non_vc_witness(&window(0.0, 0.1), &[0.01], 2).unwrap();
        assert!((rows[0].rhs - 1.0 / (160.0 * 100f64.ln())).abs() < 1e-18);
        assert!((rows[0].rhs - 1.357e-3).abs() < 1e-6);
    }

    #[test]
    fn complement_of_zones() {
        assert_eq!(complement(&[(-0.2, 0.3), (0.5, 0.6)]), vec![(0.3, 0.5), (0.6, 1.0)]);
        assert_eq!(complement(&[]), vec![(0.0, 1.0)]);
    }
}
