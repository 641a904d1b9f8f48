//! The isotropic, chart and pair-kernel estimators and their expectations.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::geometry::{unit_sphere_area, EmbeddedManifold, ManifoldKind};
use crate::kernels::{self, make_lle_sphere_kernel, ChartKernel, ChartProfile, IsotropicKernel};
use crate::quad;
use crate::sampling::{DensityModel, DensityShape, SampleSet};

/// Ambient dimensions above this fall back to brute-force summation.
const INDEX_MAX_AMBIENT: usize = 4;
const MIN_NODES_ACROSS_SUPPORT: f64 = 32.0;

/// Bandwidth ε > 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::argument(format!("bandwidth {eps} must be positive")));
        }
        Ok(Bandwidth(eps))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// A warning when ε exceeds the diameter of the manifold.
    pub fn warning(self, manifold: &EmbeddedManifold) -> Option<String> {
        (self.0 > manifold.diameter())
            .then(|| format!("bandwidth {} exceeds the manifold diameter {:.6}", self.0, manifold.diameter()))
    }
}

/// A kernel K_ε(ι(x), ι(y)) used without the 1/ε^d factor of the radial estimators.
pub trait PairKernel: Send + Sync + fmt::Debug {
    fn eval(&self, manifold: &EmbeddedManifold, x: &[f64], y: &[f64]) -> f64;
    fn bandwidth(&self) -> f64;
    /// α with K_ε ≤ K_sup / ε^α.
    fn blowup_exponent(&self) -> f64;
    fn k_sup(&self) -> f64;
    fn normalized_per_x(&self) -> bool;
    fn descriptor(&self) -> String;
    /// The kernel as a function of geodesic distance, when it is one.
    fn geodesic_profile(&self, _t: f64) -> Option<f64> {
        None
    }
    /// Geodesic radius beyond which the kernel vanishes.
    fn geodesic_support(&self) -> f64;
}

/// Volume of the geodesic ball of radius r below the injectivity radius.
pub fn geodesic_ball_volume(manifold: &EmbeddedManifold, r: f64) -> f64 {
    match manifold.kind() {
        ManifoldKind::Sphere { dim } => {
            let area = unit_sphere_area(*dim);
            match dim {
                1 => 2.0 * r,
                2 => TAU * (1.0 - r.cos()),
                _ => {
                    let d = *dim as i32;
                    area * quad::adaptive_gauss_kronrod(|t| t.sin().powi(d - 1), 0.0, r, 1e-14, 30).value
                }
            }
        }
        ManifoldKind::ProductOfCircles { dim } => unit_sphere_area(*dim) / *dim as f64 * r.powi(*dim as i32),
        _ => 2.0 * r,
    }
}

/// Indicator of the geodesic ball of radius ε divided by its volume.
#[derive(Debug, Clone)]
pub struct GeodesicBallKernel {
    eps: f64,
    dim: usize,
    value: f64,
    k_sup: f64,
}

impl GeodesicBallKernel {
    pub fn new(manifold: &EmbeddedManifold, eps: f64) -> Result<Self> {
        let inj = manifold.injectivity_radius();
        if !(eps > 0.0 && eps < inj) {
            return Err(Error::argument(format!("ball radius {eps} outside (0, {inj})")));
        }
        let dim = manifold.intrinsic_dim();
        let value = 1.0 / geodesic_ball_volume(manifold, eps);
        // ε^d / Vol(B_ε) is nondecreasing in ε on all shipped manifolds.
        let k_sup = inj.powi(dim as i32) / geodesic_ball_volume(manifold, inj * (1.0 - 1e-12));
        Ok(GeodesicBallKernel { eps, dim, value, k_sup })
    }
}

impl PairKernel for GeodesicBallKernel {
    fn eval(&self, manifold: &EmbeddedManifold, x: &[f64], y: &[f64]) -> f64 {
        if manifold.geodesic_unchecked(x, y) <= self.eps {
            self.value
        } else {
            0.0
        }
    }
    fn bandwidth(&self) -> f64 {
        self.eps
    }
    fn blowup_exponent(&self) -> f64 {
        self.dim as f64
    }
    fn k_sup(&self) -> f64 {
        self.k_sup
    }
    fn normalized_per_x(&self) -> bool {
        true
    }
    fn descriptor(&self) -> String {
        "geoball".into()
    }
    fn geodesic_profile(&self, t: f64) -> Option<f64> {
        Some(if t <= self.eps { self.value } else { 0.0 })
    }
    fn geodesic_support(&self) -> f64 {
        self.eps
    }
}

/// Kernel flavors accepted by the estimators.
#[derive(Debug, Clone)]
pub enum EstimatorKernel {
    Isotropic(IsotropicKernel),
    Chart { kernel: ChartKernel, chart_radius: f64 },
    Pair(Arc<dyn PairKernel>),
}

impl EstimatorKernel {
    /// Parses a kernel descriptor for a given manifold and bandwidth.
    ///
    /// Isotropic descriptors take `norm=1` to normalize in the intrinsic dimension; `uniform` and `gauss`
    /// are normalized by default. `quadratic` and `lle` default to the bandwidth and the normalizing `a`.
    pub fn from_descriptor(raw: &str, manifold: &EmbeddedManifold, eps: f64) -> Result<Self> {
        let desc = Descriptor::parse(raw)?;
        let d = manifold.intrinsic_dim();
        let cfg = |e: Error| match e {
            Error::Argument(m) => Error::config(format!("kernel `{raw}`: {m}")),
            other => other,
        };
        let norm_flag = |default: bool| -> Result<bool> { Ok(desc.f64("norm")?.map(|v| v != 0.0).unwrap_or(default)) };
        let iso = |k: IsotropicKernel, normalize: bool| -> Result<Self> {
            let k = if normalize { kernels::normalize(&k, d).map_err(cfg)? } else { k };
            Ok(EstimatorKernel::Isotropic(k))
        };
        match desc.name() {
            "uniform" => {
                desc.expect_keys(&["rho"])?;
                iso(kernels::make_uniform_kernel(desc.f64_or("rho", 1.0)?, d).map_err(cfg)?, false)
            }
            "step" => {
                desc.expect_keys(&["c", "a", "b", "norm"])?;
                let get = |k: &str| desc.list(k)?.ok_or_else(|| Error::config(format!("step kernel needs `{k}`")));
                let (c, a, b) = (get("c")?, get("a")?, get("b")?);
                if c.len() != a.len() || a.len() != b.len() {
                    return Err(Error::config("step kernel lists c, a, b differ in length"));
                }
                let levels: Vec<_> = (0..c.len()).map(|i| (c[i], a[i], b[i])).collect();
                iso(kernels::make_step_kernel(&levels).map_err(cfg)?, norm_flag(false)?)
            }
            "cantor" => {
                desc.expect_keys(&["norm"])?;
                iso(kernels::make_cantor_example_kernel(), norm_flag(false)?)
            }
            "irregular" => {
                desc.expect_keys(&["norm"])?;
                iso(kernels::make_irregular_kernel(), norm_flag(false)?)
            }
            "gauss" => {
                desc.expect_keys(&["cutoff", "norm"])?;
                iso(
                    kernels::make_truncated_gaussian_kernel(desc.f64_or("cutoff", 3.0)?).map_err(cfg)?,
                    norm_flag(true)?,
                )
            }
            "quadratic" => {
                desc.expect_keys(&["eps", "a", "norm"])?;
                let e = desc.f64_or("eps", eps)?;
                let a = desc.f64_or("a", kernels::normalizing_quadratic_a(e, d))?;
                iso(kernels::make_truncated_quadratic_kernel(e, a).map_err(cfg)?, norm_flag(false)?)
            }
            "lle" => {
                desc.expect_keys(&["eps", "a", "chart"])?;
                if !matches!(manifold.kind(), ManifoldKind::Sphere { .. } | ManifoldKind::Circle) {
                    return Err(Error::config("the lle kernel is defined on round spheres only"));
                }
                let e = desc.f64_or("eps", eps)?;
                let a = desc.f64_or("a", kernels::normalizing_quadratic_a(e, d))?;
                let lle = make_lle_sphere_kernel(e, a).map_err(cfg)?;
                Ok(EstimatorKernel::Chart { kernel: lle.chart, chart_radius: desc.f64_or("chart", PI / 2.0)? })
            }
            "box" => {
                desc.expect_keys(&["c", "r", "chart"])?;
                let r = desc.f64_or("r", 1.0)?;
                Ok(EstimatorKernel::Chart {
                    kernel: ChartKernel::constant_box(desc.f64_or("c", 1.0)?, r).map_err(cfg)?,
                    chart_radius: desc.f64_or("chart", 0.5 * manifold.injectivity_radius())?,
                })
            }
            "geoball" => {
                desc.expect_keys(&[])?;
                Ok(EstimatorKernel::Pair(Arc::new(GeodesicBallKernel::new(manifold, eps).map_err(cfg)?)))
            }
            other => Err(Error::config(format!("unknown kernel `{other}`"))),
        }
    }

    pub fn flavor(&self) -> &'static str {
        match self {
            EstimatorKernel::Isotropic(_) => "isotropic",
            EstimatorKernel::Chart { .. } => "chart",
            EstimatorKernel::Pair(_) => "pair",
        }
    }

    /// Ambient radius, in units of distance, outside which every term vanishes. `None` if unbounded.
    fn ambient_reach(&self, eps: f64) -> Option<f64> {
        match self {
            EstimatorKernel::Isotropic(k) if k.is_compact() => Some(eps * k.support_radius()),
            EstimatorKernel::Isotropic(_) => None,
            EstimatorKernel::Chart { .. } => None,
            EstimatorKernel::Pair(p) => Some(p.geodesic_support()),
        }
    }

    /// Half the geodesic extent of the kernel bump, used by the quadrature resolution check.
    fn geodesic_halfwidth(&self, eps: f64) -> f64 {
        match self {
            EstimatorKernel::Isotropic(k) => eps * k.support_radius(),
            EstimatorKernel::Chart { kernel, .. } => eps * kernel.support_halfwidth(),
            EstimatorKernel::Pair(p) => p.geodesic_support(),
        }
    }
}

/// Uniform grid over ambient space with cells of side `cell`.
#[derive(Debug, Clone)]
struct NeighborIndex {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<u32>>,
    offsets: Vec<Vec<i64>>,
}

impl NeighborIndex {
    fn build(ambient: &[f64], p: usize, radius: f64) -> Self {
        let cell = radius * (1.0 + 1e-9);
        let mut buckets: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, a) in ambient.chunks_exact(p).enumerate() {
            buckets.entry(Self::key(a, cell)).or_default().push(i as u32);
        }
        let mut offsets = vec![vec![]];
        for _ in 0..p {
            offsets = offsets
                .into_iter()
                .flat_map(|o: Vec<i64>| {
                    (-1..=1).map(move |s| {
                        let mut o = o.clone();
                        o.push(s);
                        o
                    })
                })
                .collect();
        }
        NeighborIndex { cell, buckets, offsets }
    }

    fn key(a: &[f64], cell: f64) -> Vec<i64> {
        a.iter().map(|v| (v / cell).floor() as i64).collect()
    }

    /// Calls `f` on every sample in the 3^p neighboring cells, in a fixed order.
    fn for_each_near(&self, a: &[f64], mut f: impl FnMut(usize)) {
        let base = Self::key(a, self.cell);
        let mut key = base.clone();
        for off in &self.offsets {
            for (k, (b, o)) in key.iter_mut().zip(base.iter().zip(off)) {
                *k = b + o;
            }
            if let Some(ids) = self.buckets.get(&key) {
                ids.iter().for_each(|&i| f(i as usize));
            }
        }
    }
}

/// Samples with their ambient images and an optional neighbor index.
#[derive(Debug, Clone)]
pub struct PreparedSamples {
    samples: SampleSet,
    ambient: Vec<f64>,
    ambient_dim: usize,
    index: Option<NeighborIndex>,
}

impl PreparedSamples {
    pub fn new(manifold: &EmbeddedManifold, samples: SampleSet) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::argument("empty sample set"));
        }
        if samples.dim() != manifold.param_dim() {
            return Err(Error::domain(format!(
                "samples have dimension {}, manifold expects {}",
                samples.dim(),
                manifold.param_dim()
            )));
        }
        let p = manifold.ambient_dim();
        let mut ambient = vec![0.0; samples.len() * p];
        for (pt, out) in samples.iter().zip(ambient.chunks_exact_mut(p)) {
            manifold.embed_into(pt, out);
        }
        Ok(PreparedSamples { samples, ambient, ambient_dim: p, index: None })
    }

    /// Adds a neighbor index for kernels vanishing beyond ambient distance `radius`.
    pub fn with_index(mut self, radius: f64) -> Self {
        if self.ambient_dim <= INDEX_MAX_AMBIENT && radius > 0.0 && radius.is_finite() {
            self.index = Some(NeighborIndex::build(&self.ambient, self.ambient_dim, radius));
        }
        self
    }

    pub fn has_index(&self) -> bool {
        self.index.is_some()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    fn ambient(&self, i: usize) -> &[f64] {
        &self.ambient[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    /// Calls `f(i)` for every sample that may lie within the indexed radius of `a`, or all samples.
    fn candidates(&self, a: &[f64], mut f: impl FnMut(usize)) {
        match &self.index {
            Some(idx) => idx.for_each_near(a, f),
            None => (0..self.len()).for_each(&mut f),
        }
    }
}

fn chord(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// (1/(nε^d)) Σ K(‖ι(x_i) − ι(x)‖/ε) by direct summation.
pub fn kde_isotropic(
    manifold: &EmbeddedManifold,
    samples: &SampleSet,
    kernel: &IsotropicKernel,
    eps: Bandwidth,
    x: &[f64],
) -> Result<f64> {
    let prepared = PreparedSamples::new(manifold, samples.clone())?;
    isotropic_sum(manifold, &prepared, kernel, eps, x)
}

fn isotropic_sum(
    manifold: &EmbeddedManifold,
    prepared: &PreparedSamples,
    kernel: &IsotropicKernel,
    eps: Bandwidth,
    x: &[f64],
) -> Result<f64> {
    let xa = manifold.embed(x)?;
    let e = eps.value();
    let mut sum = 0.0;
    prepared.candidates(&xa, |i| sum += kernel.eval(chord(prepared.ambient(i), &xa) / e));
    Ok(sum / (prepared.len() as f64 * e.powi(manifold.intrinsic_dim() as i32)))
}

/// (1/(nε^d U_x(0))) Σ K(Φ_x⁻¹(x_i)/ε) with the normal-coordinate chart of the given radius.
pub fn kde_chart(
    manifold: &EmbeddedManifold,
    samples: &SampleSet,
    kernel: &ChartKernel,
    eps: Bandwidth,
    x: &[f64],
    chart_radius: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::argument("empty sample set"));
    }
    chart_sum(manifold, samples, kernel, eps, x, chart_radius)
}

fn chart_sum(
    manifold: &EmbeddedManifold,
    samples: &SampleSet,
    kernel: &ChartKernel,
    eps: Bandwidth,
    x: &[f64],
    chart_radius: f64,
) -> Result<f64> {
    let chart = manifold.build_chart(x, chart_radius).map_err(|e| match e {
        Error::Domain(m) => Error::config(m),
        other => other,
    })?;
    let e = eps.value();
    let need = e * kernel.support_halfwidth() * chart.bilipschitz_bound();
    if chart_radius <= need {
        return Err(Error::config(format!("chart radius {chart_radius} does not exceed ε·R·D_1 = {need:.6}")));
    }
    let mut sum = 0.0;
    let mut w = Vec::with_capacity(manifold.intrinsic_dim());
    for y in samples.iter() {
        if let Some(v) = chart.inverse(y) {
            w.clear();
            w.extend(v.iter().map(|c| c / e));
            sum += kernel.eval(&w);
        }
    }
    let d = manifold.intrinsic_dim() as i32;
    Ok(sum / (samples.len() as f64 * e.powi(d) * chart.volume_density_at_zero()))
}

/// (1/n) Σ K_ε(ι(x), ι(x_i)).
pub fn kde_pair(manifold: &EmbeddedManifold, samples: &SampleSet, kernel: &dyn PairKernel, x: &[f64]) -> Result<f64> {
    let prepared = PreparedSamples::new(manifold, samples.clone())?;
    pair_sum(manifold, &prepared, kernel, x)
}

fn pair_sum(
    manifold: &EmbeddedManifold,
    prepared: &PreparedSamples,
    kernel: &dyn PairKernel,
    x: &[f64],
) -> Result<f64> {
    manifold.validate_point(x)?;
    let xa = manifold.embed(x)?;
    let mut sum = 0.0;
    prepared.candidates(&xa, |i| sum += kernel.eval(manifold, x, prepared.samples.point(i)));
    Ok(sum / prepared.len() as f64)
}

/// A manifold, kernel and bandwidth bundled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Estimator {
    manifold: Arc<EmbeddedManifold>,
    kernel: EstimatorKernel,
    eps: Bandwidth,
}

impl Estimator {
    pub fn new(manifold: Arc<EmbeddedManifold>, kernel: EstimatorKernel, eps: Bandwidth) -> Self {
        Estimator { manifold, kernel, eps }
    }

    pub fn manifold(&self) -> &Arc<EmbeddedManifold> {
        &self.manifold
    }

    pub fn kernel(&self) -> &EstimatorKernel {
        &self.kernel
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.eps
    }

    /// Embeds the samples and indexes them when the kernel has bounded ambient reach.
    pub fn prepare(&self, samples: SampleSet) -> Result<PreparedSamples> {
        let prepared = PreparedSamples::new(&self.manifold, samples)?;
        Ok(match self.kernel.ambient_reach(self.eps.value()) {
            Some(r) => prepared.with_index(r),
            None => prepared,
        })
    }

    pub fn estimate(&self, prepared: &PreparedSamples, x: &[f64]) -> Result<f64> {
        match &self.kernel {
            EstimatorKernel::Isotropic(k) => isotropic_sum(&self.manifold, prepared, k, self.eps, x),
            EstimatorKernel::Chart { kernel, chart_radius } => {
                chart_sum(&self.manifold, prepared.samples(), kernel, self.eps, x, *chart_radius)
            }
            EstimatorKernel::Pair(p) => pair_sum(&self.manifold, prepared, p.as_ref(), x),
        }
    }

    /// Estimates at every point, in parallel over points and in point order.
    pub fn estimate_many(&self, prepared: &PreparedSamples, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|x| self.estimate(prepared, x)).collect()
    }

    pub fn expected(&self, density: &DensityModel, x: &[f64], quadrature: Quadrature) -> Result<f64> {
        expected_kde(&self.kernel, self.eps, x, density, quadrature)
    }
}

/// How `expected_kde` integrates over the manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Polar coordinates when available, otherwise a grid fine enough for the kernel.
    Auto,
    /// Adaptive integration in geodesic polar coordinates around x (circle and 2-sphere).
    Polar,
    /// The manifold's quadrature grid at the given resolution.
    Grid { resolution: usize },
}

/// E K_n(x) = ∫_M w_ε(x, y) P(y) dV(y) for the estimator's weight w_ε.
pub fn expected_kde(
    kernel: &EstimatorKernel,
    eps: Bandwidth,
    x: &[f64],
    density: &DensityModel,
    quadrature: Quadrature,
) -> Result<f64> {
    let m = density.manifold().as_ref();
    m.validate_point(x)?;
    let e = eps.value();
    let polar = polar_weight(kernel, m, e);
    match quadrature {
        Quadrature::Polar => {
            let (w, bps, tmax) = polar.ok_or_else(|| {
                Error::Unsupported(format!("polar quadrature for the {} kernel on {m}", kernel.flavor()))
            })?;
            Ok(polar_expectation(m, density, x, &*w, &bps, tmax))
        }
        Quadrature::Auto => match polar {
            Some((w, bps, tmax)) => Ok(polar_expectation(m, density, x, &*w, &bps, tmax)),
            None => {
                let res = auto_resolution(kernel, m, e);
                grid_expectation(kernel, m, e, x, density, res)
            }
        },
        Quadrature::Grid { resolution } => grid_expectation(kernel, m, e, x, density, resolution),
    }
}

type RadialWeight<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

/// Weight as a function of geodesic distance with its breakpoints and cutoff, when it is radial.
fn polar_weight<'a>(
    kernel: &'a EstimatorKernel,
    m: &EmbeddedManifold,
    e: f64,
) -> Option<(RadialWeight<'a>, Vec<f64>, f64)> {
    let d = match m.kind() {
        ManifoldKind::Circle => 1,
        ManifoldKind::Sphere { dim } if *dim <= 2 => *dim,
        _ => return None,
    };
    let ed = e.powi(d as i32);
    let geo_of_chord = |c: f64| if c >= 2.0 { PI } else { 2.0 * (0.5 * c).asin() };
    match kernel {
        EstimatorKernel::Isotropic(k) => {
            let bps: Vec<f64> = k.profile().breakpoints().iter().map(|b| geo_of_chord(b * e)).collect();
            let tmax = if k.is_compact() { geo_of_chord(k.support_radius() * e) } else { PI };
            let w = move |t: f64| k.eval(2.0 * (0.5 * t).sin() / e) / ed;
            Some((Box::new(w), bps, tmax))
        }
        EstimatorKernel::Chart { kernel: ck, chart_radius } => {
            let ChartProfile::Radial(k) = ck.profile() else { return None };
            let r = *chart_radius;
            let bps: Vec<f64> = k.profile().breakpoints().iter().map(|b| b * e).filter(|t| *t < r).collect();
            let tmax = (k.support_radius() * e).min(r);
            let w = move |t: f64| if t < r { k.eval(t / e) / ed } else { 0.0 };
            Some((Box::new(w), bps, tmax.min(PI)))
        }
        EstimatorKernel::Pair(p) => {
            p.geodesic_profile(0.0)?;
            let s = p.geodesic_support();
            let w = move |t: f64| p.geodesic_profile(t).unwrap_or(0.0);
            Some((Box::new(w), vec![s], s.min(PI)))
        }
    }
}

/// Distances from x at which the density's restriction to geodesic circles has kinks or jumps.
fn density_breakpoints(m: &EmbeddedManifold, density: &DensityModel, x: &[f64]) -> Vec<f64> {
    match density.shape() {
        DensityShape::Uniform => vec![],
        DensityShape::Holder { .. } => {
            let c = m.geodesic_unchecked(x, density.anchor());
            vec![c, PI - c]
        }
        DensityShape::Hemisphere { .. } => {
            let mut xa = vec![0.0; m.ambient_dim()];
            m.embed_into(x, &mut xa);
            let c = xa[0].clamp(-1.0, 1.0).acos();
            let g = (0.5 * PI - c).abs();
            vec![g, PI - g]
        }
    }
}

fn polar_expectation(
    m: &EmbeddedManifold,
    density: &DensityModel,
    x: &[f64],
    w: &dyn Fn(f64) -> f64,
    kernel_bps: &[f64],
    tmax: f64,
) -> f64 {
    let mut bps = kernel_bps.to_vec();
    bps.extend(density_breakpoints(m, density, x));
    bps.retain(|t| *t > 0.0 && *t < tmax);
    match m.kind() {
        ManifoldKind::Circle => {
            let f = |t: f64| {
                let wt = w(t);
                if wt == 0.0 {
                    return 0.0;
                }
                wt * (density.evaluate(&[x[0] + t]) + density.evaluate(&[x[0] - t]))
            };
            quad::integrate_pieces(f, 0.0, tmax, &bps, 1e-13).value
        }
        _ => {
            let (e1, e2) = orthonormal_pair(x);
            let ring = |t: f64| {
                let (st, ct) = t.sin_cos();
                let g = |phi: f64| {
                    let (sp, cp) = phi.sin_cos();
                    let mut y = [0.0; 3];
                    for k in 0..3 {
                        y[k] = ct * x[k] + st * (cp * e1[k] + sp * e2[k]);
                    }
                    density.evaluate(&y)
                };
                if matches!(density.shape(), DensityShape::Uniform) {
                    TAU * density.evaluate(x)
                } else {
                    quad::adaptive_gauss_kronrod(g, 0.0, TAU, 1e-12, 14).value
                }
            };
            let f = |t: f64| {
                let wt = w(t);
                if wt == 0.0 {
                    return 0.0;
                }
                wt * ring(t) * t.sin()
            };
            quad::integrate_pieces(f, 0.0, tmax, &bps, 1e-12).value
        }
    }
}

fn orthonormal_pair(x: &[f64]) -> ([f64; 3], [f64; 3]) {
    let pick = if x[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot: f64 = (0..3).map(|k| pick[k] * x[k]).sum();
    let mut e1 = [0.0; 3];
    for k in 0..3 {
        e1[k] = pick[k] - dot * x[k];
    }
    let n = (e1.iter().map(|a| a * a).sum::<f64>()).sqrt();
    e1.iter_mut().for_each(|a| *a /= n);
    let e2 = [x[1] * e1[2] - x[2] * e1[1], x[2] * e1[0] - x[0] * e1[2], x[0] * e1[1] - x[1] * e1[0]];
    (e1, e2)
}

/// Typical node spacing of the quadrature grid.
fn grid_spacing(m: &EmbeddedManifold, resolution: usize) -> Result<f64> {
    let nodes = m.quadrature_grid(resolution)?.len() as f64;
    Ok((m.volume() / nodes).powf(1.0 / m.intrinsic_dim() as f64))
}

fn auto_resolution(kernel: &EstimatorKernel, m: &EmbeddedManifold, e: f64) -> usize {
    let base = m.reference_resolution();
    let across = 2.0 * kernel.geodesic_halfwidth(e) / grid_spacing(m, base).unwrap_or(f64::INFINITY);
    if across >= MIN_NODES_ACROSS_SUPPORT {
        base
    } else {
        (base as f64 * MIN_NODES_ACROSS_SUPPORT / across).ceil() as usize
    }
}

fn grid_expectation(
    kernel: &EstimatorKernel,
    m: &EmbeddedManifold,
    e: f64,
    x: &[f64],
    density: &DensityModel,
    resolution: usize,
) -> Result<f64> {
    let h = grid_spacing(m, resolution)?;
    let across = 2.0 * kernel.geodesic_halfwidth(e) / h;
    if across < MIN_NODES_ACROSS_SUPPORT {
        return Err(Error::config(format!(
            "quadrature resolution {resolution} puts {across:.1} nodes across the kernel support, need {MIN_NODES_ACROSS_SUPPORT}"
        )));
    }
    let grid = m.quadrature_grid(resolution)?;
    let d = m.intrinsic_dim() as i32;
    let ed = e.powi(d);
    let mut xa = vec![0.0; m.ambient_dim()];
    m.embed_into(x, &mut xa);
    let mut ya = vec![0.0; m.ambient_dim()];
    let total = match kernel {
        EstimatorKernel::Isotropic(k) => grid.integrate(|y| {
            m.embed_into(y, &mut ya);
            k.eval(chord(&xa, &ya) / e) / ed * density.evaluate(y)
        }),
        EstimatorKernel::Chart { kernel: ck, chart_radius } => {
            let chart = m.build_chart(x, *chart_radius)?;
            grid.integrate(|y| match chart.inverse(y) {
                Some(v) => {
                    let w: Vec<f64> = v.iter().map(|c| c / e).collect();
                    ck.eval(&w) / ed * density.evaluate(y)
                }
                None => 0.0,
            })
        }
        EstimatorKernel::Pair(p) => grid.integrate(|y| p.eval(m, x, y) * density.evaluate(y)),
    };
    Ok(total)
}
