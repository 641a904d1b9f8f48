//! Darboux sums of restricted kernels on closed curves and critical sets of the distance function.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ClosedCurve, EmbeddedManifold};
use crate::kernels::{IsotropicKernel, ValueRange};

/// Cells whose whole slope enclosure lies within this band are flat.
pub const FLAT_TOLERANCE: f64 = 1e-10;

fn curve_of(manifold: &EmbeddedManifold) -> Result<&dyn ClosedCurve> {
    manifold.as_curve().ok_or_else(|| Error::Unsupported(format!("Darboux sums need a curve, got {manifold}")))
}

/// Range of g(θ) = K(‖γ(θ) − c‖/ε)·|γ'(θ)| over the cell.
fn cell_range(
    curve: &dyn ClosedCurve,
    kernel: &IsotropicKernel,
    eps: f64,
    c: [f64; 2],
    t0: f64,
    t1: f64,
) -> ValueRange {
    let (dlo, dhi) = curve.distance_enclosure(c, t0, t1);
    let k = kernel.oscillation(dlo / eps, dhi / eps);
    let (slo, shi) = curve.speed_enclosure(t0, t1);
    let products = [k.lo * slo, k.lo * shi, k.hi * slo, k.hi * shi];
    ValueRange {
        lo: products.iter().copied().fold(f64::INFINITY, f64::min),
        hi: products.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Per-cell bounds on g for the uniform partition of [0, 2π) into m cells, without refinement history.
pub fn cell_bounds(
    manifold: &EmbeddedManifold,
    kernel: &IsotropicKernel,
    eps: f64,
    center: [f64; 2],
    m: usize,
) -> Result<Vec<ValueRange>> {
    let curve = curve_of(manifold)?;
    check_eps(eps)?;
    let h = TAU / m as f64;
    Ok((0..m).map(|i| cell_range(curve, kernel, eps, center, i as f64 * h, (i + 1) as f64 * h)).collect())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::argument(format!("bandwidth {eps} must be positive")));
    }
    Ok(())
}

/// (U_m, L_m) for m a power of two.
pub fn darboux_sums(
    manifold: &EmbeddedManifold,
    kernel: &IsotropicKernel,
    eps: f64,
    center: [f64; 2],
    m: usize,
) -> Result<(f64, f64)> {
    if !m.is_power_of_two() {
        return Err(Error::argument(format!("cell count {m} is not a power of two")));
    }
    let report = darboux_report(manifold, kernel, eps, center, m.trailing_zeros(), m.trailing_zeros())?;
    let last = &report.levels[0];
    Ok((last.upper, last.lower))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarbouxLevel {
    pub level: u32,
    pub m: usize,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarbouxReport {
    pub levels: Vec<DarbouxLevel>,
    /// Aitken extrapolation of the last three gaps, clamped to [0, last gap].
    pub limit_gap: f64,
}

impl DarbouxReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.gap).collect()
    }
}

/// Darboux sums at m = 2^first ..= 2^last. Each child cell's range is intersected with its parent's,
/// so U is nonincreasing and L nondecreasing across levels.
pub fn darboux_report(
    manifold: &EmbeddedManifold,
    kernel: &IsotropicKernel,
    eps: f64,
    center: [f64; 2],
    first: u32,
    last: u32,
) -> Result<DarbouxReport> {
    let curve = curve_of(manifold)?;
    check_eps(eps)?;
    if first > last || last > 24 {
        return Err(Error::argument(format!("levels {first}..={last} must be ordered and at most 24")));
    }
    let mut ranges = vec![cell_range(curve, kernel, eps, center, 0.0, TAU)];
    let mut levels = Vec::new();
    for level in 0..=last {
        if level > 0 {
            let m = 1usize << level;
            let h = TAU / m as f64;
            ranges = (0..m)
                .map(|i| {
                    let own = cell_range(curve, kernel, eps, center, i as f64 * h, (i + 1) as f64 * h);
                    let parent = ranges[i / 2];
                    ValueRange { lo: own.lo.max(parent.lo), hi: own.hi.min(parent.hi) }
                })
                .collect();
        }
        if level >= first {
            let m = ranges.len();
            let h = TAU / m as f64;
            let his: Vec<f64> = ranges.iter().map(|r| r.hi).collect();
            let los: Vec<f64> = ranges.iter().map(|r| r.lo).collect();
            let upper = tree_sum(&his) * h;
            let lower = tree_sum(&los) * h;
            levels.push(DarbouxLevel { level, m, upper, lower, gap: (upper - lower).max(0.0) });
        }
    }
    let limit_gap = aitken_limit(&levels.iter().map(|l| l.gap).collect::<Vec<_>>());
    Ok(DarbouxReport { levels, limit_gap })
}

/// Pairwise sum along the dyadic tree. Rounding is monotone, so a child level whose pairs are bounded
/// by their parent sums to at most twice the parent level, exactly.
fn tree_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => tree_sum(&v[..n / 2]) + tree_sum(&v[n / 2..]),
    }
}

fn aitken_limit(gaps: &[f64]) -> f64 {
    let k = gaps.len();
    let last = *gaps.last().unwrap_or(&0.0);
    if k < 3 {
        return last;
    }
    let (a, b, c) = (gaps[k - 3], gaps[k - 2], gaps[k - 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-300 {
        return last;
    }
    (c - (c - b) * (c - b) / denom).clamp(0.0, last)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegrabilityVerdict {
    Integrable,
    NotIntegrable,
    Inconclusive,
}

/// Integrable: the finest gap is below the threshold and the last two doublings each shrank the gap
/// by at least 1.5×. Not integrable: the last three gaps exceed the threshold with consecutive ratios
/// at most 1.25.
pub fn integrability_verdict(gaps: &[f64], threshold: f64) -> IntegrabilityVerdict {
    let k = gaps.len();
    if k < 4 {
        return IntegrabilityVerdict::Inconclusive;
    }
    let last = gaps[k - 1];
    let shrinks = |a: f64, b: f64| b == 0.0 || a / b >= 1.5;
    if last < threshold && shrinks(gaps[k - 3], gaps[k - 2]) && shrinks(gaps[k - 2], last) {
        return IntegrabilityVerdict::Integrable;
    }
    let tail = &gaps[k - 3..];
    if tail.iter().all(|g| *g > threshold) && tail.windows(2).all(|w| w[0] / w[1] <= 1.25) {
        return IntegrabilityVerdict::NotIntegrable;
    }
    IntegrabilityVerdict::Inconclusive
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalSetVerdict {
    JordanMeasurableLikely,
    NotJordanMeasurableLikely,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSetReport {
    pub center: [f64; 2],
    pub h: f64,
    /// Merged parameter intervals covering the critical cells at resolution h.
    pub cover: Vec<(f64, f64)>,
    /// Parameter measure of flat cells at resolution h.
    pub flat_measure: f64,
    /// Outer measure of the boundary at h, h/2, h/4.
    pub boundary_measure: [f64; 3],
    pub verdict: CriticalSetVerdict,
}

struct CellScan {
    critical: Vec<bool>,
    flat: Vec<bool>,
    width: f64,
}

fn scan(curve: &dyn ClosedCurve, c: [f64; 2], h: f64) -> CellScan {
    let m = (TAU / h).ceil() as usize;
    let width = TAU / m as f64;
    let mut critical = Vec::with_capacity(m);
    let mut flat = Vec::with_capacity(m);
    for i in 0..m {
        let (lo, hi) = curve.distance_slope_enclosure(c, i as f64 * width, (i + 1) as f64 * width);
        critical.push(lo <= 0.0 && hi >= 0.0);
        flat.push(lo >= -FLAT_TOLERANCE && hi <= FLAT_TOLERANCE);
    }
    CellScan { critical, flat, width }
}

impl CellScan {
    fn boundary_measure(&self) -> f64 {
        self.critical.iter().zip(&self.flat).filter(|(c, f)| **c && !**f).count() as f64 * self.width
    }
}

/// Critical cells of θ ↦ ‖γ(θ) − c‖ at resolution h and the trend of the boundary's outer measure.
pub fn critical_set(manifold: &EmbeddedManifold, center: [f64; 2], h: f64) -> Result<CriticalSetReport> {
    let curve = curve_of(manifold)?;
    if !(h > 0.0 && h < TAU) {
        return Err(Error::argument(format!("cell width {h} outside (0, 2π)")));
    }
    let scans = [scan(curve, center, h), scan(curve, center, h / 2.0), scan(curve, center, h / 4.0)];
    let boundary_measure = [scans[0].boundary_measure(), scans[1].boundary_measure(), scans[2].boundary_measure()];
    let s = &scans[0];
    let mut cover: Vec<(f64, f64)> = Vec::new();
    for (i, _) in s.critical.iter().enumerate().filter(|(_, c)| **c) {
        let (a, b) = (i as f64 * s.width, (i + 1) as f64 * s.width);
        match cover.last_mut() {
            Some(last) if last.1 == a => last.1 = b,
            _ => cover.push((a, b)),
        }
    }
    let flat_measure = s.flat.iter().filter(|f| **f).count() as f64 * s.width;
    let (first, finest) = (boundary_measure[0], boundary_measure[2]);
    let verdict = if finest == 0.0 || finest <= 0.6 * first {
        CriticalSetVerdict::JordanMeasurableLikely
    } else if first > 0.0 && finest >= 0.8 * first {
        CriticalSetVerdict::NotJordanMeasurableLikely
    } else {
        CriticalSetVerdict::Inconclusive
    };
    Ok(CriticalSetReport { center, h, cover, flat_measure, boundary_measure, verdict })
}
