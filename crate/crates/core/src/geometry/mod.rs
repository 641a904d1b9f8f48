//! Compact manifolds embedded in Euclidean space.
//!
//! Points are passed as parameter slices:
//! - `Sphere { dim }`: the unit vector itself, `dim + 1` coordinates
//! - `Circle` and `FatCantorCurve`: one angle in [0, 2π)
//! - `ProductOfCircles { dim }`: `dim` angles, embedded as a flat torus in R^{2 dim}

mod curve;
mod fat_cantor;
mod sphere;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use curve::{ClosedCurve, UnitCircle};
pub use fat_cantor::{FatCantorCurve, FatCantorCurveParams};
pub use sphere::unit_sphere_area;

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Sphere { dim: usize },
    Circle,
    ProductOfCircles { dim: usize },
    FatCantorCurve(FatCantorCurveParams),
}

#[derive(Debug, Clone)]
pub struct EmbeddedManifold {
    kind: ManifoldKind,
    fat_cantor: Option<Arc<FatCantorCurve>>,
}

/// Quadrature nodes and positive weights over the whole manifold.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    param_dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.param_dim..(i + 1) * self.param_dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.point(i))).sum()
    }
}

/// Exponential-map chart around a point.
#[derive(Debug, Clone)]
pub struct Chart<'a> {
    manifold: &'a EmbeddedManifold,
    center: Vec<f64>,
    radius: f64,
    bilipschitz: f64,
    volume_lip: f64,
}

impl<'a> Chart<'a> {
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// U_x(0); exactly one for normal coordinates.
    pub fn volume_density_at_zero(&self) -> f64 {
        1.0
    }

    /// D_1: bi-Lipschitz constant between chart and geodesic distances.
    pub fn bilipschitz_bound(&self) -> f64 {
        self.bilipschitz
    }

    /// D_2: Lipschitz constant of v ↦ U_x(v)/U_x(0).
    pub fn volume_lip_bound(&self) -> f64 {
        self.volume_lip
    }

    pub fn forward_point(&self, v: &[f64]) -> Result<Vec<f64>> {
        if norm(v) >= self.radius {
            return Err(Error::domain(format!("chart coordinate norm {} ≥ radius {}", norm(v), self.radius)));
        }
        self.manifold.exp_map(&self.center, v)
    }

    /// Ambient image of a chart coordinate.
    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        let p = self.forward_point(v)?;
        self.manifold.embed(&p)
    }

    /// Chart coordinates of a manifold point, `None` outside the chart image.
    pub fn inverse(&self, point: &[f64]) -> Option<Vec<f64>> {
        let v = self.manifold.log_map(&self.center, point).ok()?;
        (norm(&v) < self.radius).then_some(v)
    }

    pub fn volume_density(&self, v: &[f64]) -> Result<f64> {
        self.manifold.volume_density_in_normal_coords(&self.center, v)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Wraps an angle difference into (−π, π].
fn wrap_pm(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

fn wrap_angle(x: f64) -> f64 {
    let t = x.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl EmbeddedManifold {
    pub fn new(kind: ManifoldKind) -> Result<Self> {
        let mut fat_cantor = None;
        match &kind {
            ManifoldKind::Sphere { dim } if !(1..=3).contains(dim) => {
                return Err(Error::argument(format!("sphere dimension {dim} outside 1..=3")))
            }
            ManifoldKind::ProductOfCircles { dim } if !(1..=4).contains(dim) => {
                return Err(Error::argument(format!("torus dimension {dim} outside 1..=4")))
            }
            ManifoldKind::FatCantorCurve(params) => {
                fat_cantor = Some(Arc::new(FatCantorCurve::new(params.clone())?));
            }
            _ => {}
        }
        Ok(EmbeddedManifold { kind, fat_cantor })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        Self::new(ManifoldKind::Sphere { dim })
    }

    pub fn circle() -> Self {
        EmbeddedManifold { kind: ManifoldKind::Circle, fat_cantor: None }
    }

    pub fn torus(dim: usize) -> Result<Self> {
        Self::new(ManifoldKind::ProductOfCircles { dim })
    }

    pub fn fat_cantor(params: FatCantorCurveParams) -> Result<Self> {
        Self::new(ManifoldKind::FatCantorCurve(params))
    }

    /// Parses `sphere:d=2`, `circle`, `torus:d=2` or `fatcantor:depth=14,amp=0.05`.
    pub fn from_descriptor(raw: &str) -> Result<Self> {
        let d = Descriptor::parse(raw)?;
        match d.name() {
            "sphere" => {
                d.expect_keys(&["d"])?;
                Self::sphere(d.usize_or("d", 2)?)
            }
            "circle" => {
                d.expect_keys(&[])?;
                Ok(Self::circle())
            }
            "torus" => {
                d.expect_keys(&["d"])?;
                Self::torus(d.usize_or("d", 2)?)
            }
            "fatcantor" => {
                d.expect_keys(&["depth", "amp"])?;
                let depth = d.usize_or("depth", 14)? as u32;
                let amp = d.f64_or("amp", 0.05)?;
                Self::fat_cantor(FatCantorCurveParams::smith_volterra(depth, amp))
            }
            other => Err(Error::config(format!("unknown manifold `{other}`"))),
        }
        .map_err(|e| match e {
            Error::Argument(msg) => Error::Configuration(msg),
            e => e,
        })
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn intrinsic_dim(&self) -> usize {
        match &self.kind {
            ManifoldKind::Sphere { dim } | ManifoldKind::ProductOfCircles { dim } => *dim,
            ManifoldKind::Circle | ManifoldKind::FatCantorCurve(_) => 1,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.kind {
            ManifoldKind::Sphere { dim } => dim + 1,
            ManifoldKind::ProductOfCircles { dim } => 2 * dim,
            ManifoldKind::Circle | ManifoldKind::FatCantorCurve(_) => 2,
        }
    }

    /// Number of coordinates in a point slice.
    pub fn param_dim(&self) -> usize {
        match &self.kind {
            ManifoldKind::Sphere { dim } => dim + 1,
            ManifoldKind::ProductOfCircles { dim } => *dim,
            ManifoldKind::Circle | ManifoldKind::FatCantorCurve(_) => 1,
        }
    }

    pub fn volume(&self) -> f64 {
        match &self.kind {
            ManifoldKind::Sphere { dim } => unit_sphere_area(dim + 1),
            ManifoldKind::Circle => TAU,
            ManifoldKind::ProductOfCircles { dim } => TAU.powi(*dim as i32),
            ManifoldKind::FatCantorCurve(_) => self.curve_ref().length(),
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        match &self.kind {
            ManifoldKind::FatCantorCurve(_) => 0.5 * self.curve_ref().length(),
            _ => PI,
        }
    }

    /// Largest geodesic distance on the manifold.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            ManifoldKind::ProductOfCircles { dim } => PI * (*dim as f64).sqrt(),
            _ => self.injectivity_radius(),
        }
    }

    /// The closed curve behind a one-dimensional manifold.
    pub fn as_curve(&self) -> Option<&dyn ClosedCurve> {
        match &self.kind {
            ManifoldKind::Circle => Some(&UnitCircle),
            ManifoldKind::FatCantorCurve(_) => Some(self.curve_ref()),
            _ => None,
        }
    }

    pub fn fat_cantor_curve(&self) -> Option<&FatCantorCurve> {
        self.fat_cantor.as_deref()
    }

    fn curve_ref(&self) -> &FatCantorCurve {
        self.fat_cantor.as_deref().expect("fat Cantor geometry is built in the constructor")
    }

    /// Canonical descriptor string.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }

    pub fn validate_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_dim() {
            return Err(Error::domain(format!("point has {} coordinates, expected {}", p.len(), self.param_dim())));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("point has non-finite coordinates"));
        }
        if let ManifoldKind::Sphere { .. } = self.kind {
            let n = norm(p);
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!("sphere point has norm {n}")));
            }
        }
        Ok(())
    }

    /// Writes ι(p) into `out` without validation.
    pub fn embed_into(&self, p: &[f64], out: &mut [f64]) {
        match &self.kind {
            ManifoldKind::Sphere { .. } => out.copy_from_slice(p),
            ManifoldKind::Circle => {
                let (s, c) = p[0].sin_cos();
                out[0] = c;
                out[1] = s;
            }
            ManifoldKind::ProductOfCircles { .. } => {
                for (i, t) in p.iter().enumerate() {
                    let (s, c) = t.sin_cos();
                    out[2 * i] = c;
                    out[2 * i + 1] = s;
                }
            }
            ManifoldKind::FatCantorCurve(_) => {
                let q = self.curve_ref().position(p[0]);
                out.copy_from_slice(&q);
            }
        }
    }

    pub fn embed(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.validate_point(p)?;
        let mut out = vec![0.0; self.ambient_dim()];
        self.embed_into(p, &mut out);
        Ok(out)
    }

    pub fn ambient_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let a = self.embed(x)?;
        let b = self.embed(y)?;
        Ok(a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
    }

    pub fn geodesic_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.geodesic_unchecked(x, y))
    }

    pub(crate) fn geodesic_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            ManifoldKind::Sphere { .. } => sphere::great_circle(x, y),
            ManifoldKind::Circle => wrap_pm(y[0] - x[0]).abs(),
            ManifoldKind::ProductOfCircles { .. } => {
                x.iter().zip(y).map(|(a, b)| wrap_pm(b - a).powi(2)).sum::<f64>().sqrt()
            }
            ManifoldKind::FatCantorCurve(_) => {
                let c = self.curve_ref();
                let l = c.length();
                let ds = (c.arclength_at(wrap_angle(y[0])) - c.arclength_at(wrap_angle(x[0]))).abs();
                ds.min(l - ds)
            }
        }
    }

    pub fn exp_map(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.validate_point(x)?;
        if v.len() != self.intrinsic_dim() {
            return Err(Error::domain("tangent vector has the wrong dimension"));
        }
        let nv = norm(v);
        if !(nv < self.injectivity_radius()) {
            return Err(Error::domain(format!(
                "tangent norm {nv} is not below the injectivity radius {}",
                self.injectivity_radius()
            )));
        }
        Ok(match &self.kind {
            ManifoldKind::Sphere { .. } => sphere::exp(x, v),
            ManifoldKind::Circle => vec![wrap_angle(x[0] + v[0])],
            ManifoldKind::ProductOfCircles { .. } => x.iter().zip(v).map(|(a, b)| wrap_angle(a + b)).collect(),
            ManifoldKind::FatCantorCurve(_) => {
                let c = self.curve_ref();
                let s = (c.arclength_at(wrap_angle(x[0])) + v[0]).rem_euclid(c.length());
                vec![c.parameter_at(s)]
            }
        })
    }

    pub fn log_map(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        let too_far = || Error::domain("log map requested beyond the injectivity radius");
        match &self.kind {
            ManifoldKind::Sphere { .. } => {
                let v = sphere::log(x, y).ok_or_else(too_far)?;
                if norm(&v) >= PI {
                    return Err(too_far());
                }
                Ok(v)
            }
            ManifoldKind::Circle => {
                let v = wrap_pm(y[0] - x[0]);
                if v.abs() >= PI {
                    return Err(too_far());
                }
                Ok(vec![v])
            }
            ManifoldKind::ProductOfCircles { .. } => {
                let v: Vec<f64> = x.iter().zip(y).map(|(a, b)| wrap_pm(b - a)).collect();
                if norm(&v) >= PI {
                    return Err(too_far());
                }
                Ok(v)
            }
            ManifoldKind::FatCantorCurve(_) => {
                let c = self.curve_ref();
                let l = c.length();
                let ds = c.arclength_at(wrap_angle(y[0])) - c.arclength_at(wrap_angle(x[0]));
                let v = (ds + 0.5 * l).rem_euclid(l) - 0.5 * l;
                if v.abs() >= 0.5 * l {
                    return Err(too_far());
                }
                Ok(vec![v])
            }
        }
    }

    /// U_x(v), the Riemannian volume density in normal coordinates.
    pub fn volume_density_in_normal_coords(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.validate_point(x)?;
        let r = norm(v);
        if !(r < self.injectivity_radius()) {
            return Err(Error::domain(format!("normal coordinate norm {r} beyond the injectivity radius")));
        }
        Ok(match &self.kind {
            ManifoldKind::Sphere { dim } => sphere::volume_density(*dim, r),
            _ => 1.0,
        })
    }

    /// ‖II_x(θ, θ)‖ for a unit tangent direction θ.
    pub fn second_fundamental_norm(&self, x: &[f64], direction: &[f64]) -> f64 {
        match &self.kind {
            ManifoldKind::Sphere { .. } | ManifoldKind::Circle => 1.0,
            ManifoldKind::ProductOfCircles { .. } => {
                let n = norm(direction);
                direction.iter().map(|t| (t / n).powi(4)).sum::<f64>().sqrt()
            }
            ManifoldKind::FatCantorCurve(_) => self.curve_ref().curvature(wrap_angle(x[0])),
        }
    }

    /// |chord/t − (1 − ‖II(θ,θ)‖² t²/24)| along the geodesic from `x` in `direction`.
    pub fn chord_ratio_check(&self, x: &[f64], direction: &[f64], t: f64) -> Result<f64> {
        let n = norm(direction);
        if n == 0.0 || !(t > 0.0) {
            return Err(Error::argument("direction must be nonzero and t positive"));
        }
        let unit: Vec<f64> = direction.iter().map(|a| a / n).collect();
        let v: Vec<f64> = unit.iter().map(|a| a * t).collect();
        let y = self.exp_map(x, &v)?;
        let chord = self.ambient_distance(x, &y)?;
        let ii = self.second_fundamental_norm(x, &unit);
        Ok((chord / t - (1.0 - ii * ii * t * t / 24.0)).abs())
    }

    /// Resolution used when a quadrature is needed as ground truth.
    pub fn reference_resolution(&self) -> usize {
        match &self.kind {
            ManifoldKind::Sphere { dim: 1 } | ManifoldKind::Circle => 4096,
            ManifoldKind::Sphere { dim: 2 } => 400,
            ManifoldKind::Sphere { .. } => 64,
            ManifoldKind::ProductOfCircles { dim } => match dim {
                1 => 4096,
                2 => 256,
                3 => 48,
                _ => 24,
            },
            ManifoldKind::FatCantorCurve(_) => 8192,
        }
    }

    pub fn quadrature_grid(&self, resolution: usize) -> Result<QuadratureGrid> {
        if resolution < 8 {
            return Err(Error::argument(format!("quadrature resolution {resolution} below 8")));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let r = resolution as f64;
        match &self.kind {
            ManifoldKind::Circle => {
                for k in 0..resolution {
                    points.push(TAU * k as f64 / r);
                    weights.push(TAU / r);
                }
            }
            ManifoldKind::Sphere { dim: 1 } => {
                for k in 0..resolution {
                    let (s, c) = (TAU * k as f64 / r).sin_cos();
                    points.extend([c, s]);
                    weights.push(TAU / r);
                }
            }
            ManifoldKind::Sphere { dim: 2 } => {
                let nphi = 2 * resolution;
                let w = 2.0 * PI / (r * r);
                for i in 0..resolution {
                    let z = -1.0 + (i as f64 + 0.5) * 2.0 / r;
                    let rho = (1.0 - z * z).sqrt();
                    for j in 0..nphi {
                        let (s, c) = ((j as f64 + 0.5) * PI / r).sin_cos();
                        points.extend([rho * c, rho * s, z]);
                        weights.push(w);
                    }
                }
            }
            ManifoldKind::Sphere { .. } => {
                let w = 0.5 * (TAU / r).powi(2) / r;
                for i in 0..resolution {
                    let u = (i as f64 + 0.5) / r;
                    let (a, b) = ((1.0 - u).sqrt(), u.sqrt());
                    for j in 0..resolution {
                        let (s1, c1) = (TAU * j as f64 / r).sin_cos();
                        for k in 0..resolution {
                            let (s2, c2) = (TAU * (k as f64 + 0.5) / r).sin_cos();
                            points.extend([a * c1, a * s1, b * c2, b * s2]);
                            weights.push(w);
                        }
                    }
                }
            }
            ManifoldKind::ProductOfCircles { dim } => {
                let total = resolution.checked_pow(*dim as u32).filter(|&t| t <= 1 << 24);
                let total = total.ok_or_else(|| Error::argument("torus quadrature grid too large"))?;
                let w = (TAU / r).powi(*dim as i32);
                for idx in 0..total {
                    let mut rem = idx;
                    for _ in 0..*dim {
                        points.push(TAU * (rem % resolution) as f64 / r);
                        rem /= resolution;
                    }
                    weights.push(w);
                }
            }
            ManifoldKind::FatCantorCurve(_) => {
                let c = self.curve_ref();
                for k in 0..resolution {
                    let t = TAU * k as f64 / r;
                    points.push(t);
                    weights.push(c.speed(t) * TAU / r);
                }
            }
        }
        Ok(QuadratureGrid { param_dim: self.param_dim(), points, weights })
    }

    pub fn build_chart(&self, x: &[f64], r: f64) -> Result<Chart<'_>> {
        self.validate_point(x)?;
        let inj = self.injectivity_radius();
        if !(r > 0.0 && r < inj) {
            return Err(Error::domain(format!("chart radius {r} outside (0, {inj})")));
        }
        let fold = r / (inj - r);
        let (bilipschitz, volume_lip) = match &self.kind {
            ManifoldKind::Sphere { dim } => {
                let d2 = (1..=2000)
                    .map(|k| {
                        let t = r * k as f64 / 2000.0;
                        (sphere::volume_density(*dim, t) - 1.0).abs() / t
                    })
                    .fold(0.0, f64::max);
                ((r / r.sin()).max(fold), d2)
            }
            _ => (fold.max(1.0), 0.0),
        };
        Ok(Chart { manifold: self, center: x.to_vec(), radius: r, bilipschitz, volume_lip })
    }

    /// A point drawn from the normalized Riemannian volume.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match &self.kind {
            ManifoldKind::Sphere { dim } => loop {
                let g: Vec<f64> = (0..=*dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let n = norm(&g);
                if n > 1e-12 {
                    out.extend(g.iter().map(|a| a / n));
                    return;
                }
            },
            ManifoldKind::Circle => out.push(rng.random::<f64>() * TAU),
            ManifoldKind::ProductOfCircles { dim } => {
                for _ in 0..*dim {
                    out.push(rng.random::<f64>() * TAU);
                }
            }
            ManifoldKind::FatCantorCurve(_) => {
                let c = self.curve_ref();
                out.push(c.parameter_at(rng.random::<f64>() * c.length()));
            }
        }
    }

    /// Fixed reference point: the north pole, angle zero, or the torus origin.
    pub fn default_anchor(&self) -> Vec<f64> {
        match &self.kind {
            ManifoldKind::Sphere { dim } => {
                let mut p = vec![0.0; dim + 1];
                p[*dim] = 1.0;
                p
            }
            ManifoldKind::ProductOfCircles { dim } => vec![0.0; *dim],
            _ => vec![0.0],
        }
    }

    /// ∫ d_g(y, anchor)^κ dV(y) for the default anchor.
    pub fn distance_moment(&self, kappa: f64) -> f64 {
        match &self.kind {
            ManifoldKind::Circle => 2.0 * PI.powf(kappa + 1.0) / (kappa + 1.0),
            ManifoldKind::FatCantorCurve(_) => {
                let half = 0.5 * self.curve_ref().length();
                2.0 * half.powf(kappa + 1.0) / (kappa + 1.0)
            }
            ManifoldKind::Sphere { dim } => {
                let area = unit_sphere_area(*dim);
                let integrand = |t: f64| t.powf(kappa) * t.sin().powi(*dim as i32 - 1);
                area * quad::adaptive_gauss_kronrod(integrand, 0.0, PI, 1e-13, 40).value
            }
            ManifoldKind::ProductOfCircles { .. } => {
                let anchor = self.default_anchor();
                let grid = self.quadrature_grid(self.reference_resolution()).expect("reference resolution is valid");
                grid.integrate(|y| self.geodesic_unchecked(&anchor, y).powf(kappa))
            }
        }
    }

    /// Largest ratio of geodesic to chord distance over random pairs closer than `radius`.
    pub fn chord_distortion<R: Rng + ?Sized>(&self, radius: f64, pairs: usize, rng: &mut R) -> f64 {
        let mut worst: f64 = 1.0;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for _ in 0..pairs {
            x.clear();
            y.clear();
            self.sample_uniform(rng, &mut x);
            self.sample_uniform(rng, &mut y);
            let g = self.geodesic_unchecked(&x, &y);
            if g == 0.0 || g >= radius {
                continue;
            }
            let mut a = vec![0.0; self.ambient_dim()];
            let mut b = vec![0.0; self.ambient_dim()];
            self.embed_into(&x, &mut a);
            self.embed_into(&y, &mut b);
            let chord = norm(&a.iter().zip(&b).map(|(u, v)| u - v).collect::<Vec<_>>());
            worst = worst.max(g / chord);
        }
        worst
    }
}

impl fmt::Display for EmbeddedManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ManifoldKind::Sphere { dim } => write!(f, "sphere:d={dim}"),
            ManifoldKind::Circle => write!(f, "circle"),
            ManifoldKind::ProductOfCircles { dim } => write!(f, "torus:d={dim}"),
            ManifoldKind::FatCantorCurve(p) => write!(f, "fatcantor:depth={},amp={}", p.depth, p.bump_amplitude),
        }
    }
}
