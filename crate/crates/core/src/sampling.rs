//! Density models on manifolds and seeded rejection sampling.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::geometry::EmbeddedManifold;

/// Proposals tried before the empirical acceptance rate is checked.
const ACCEPTANCE_PROBE: u64 = 20_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// Generator for a (seed, stream) pair. Streams are independent and need no serial warm-up.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DensityShape {
    Uniform,
    /// 1 + strength · d_g(x, anchor)^κ before normalization.
    Holder {
        kappa: f64,
        strength: f64,
    },
    /// `ratio` where the first ambient coordinate is nonnegative, 1 elsewhere, before normalization.
    Hemisphere {
        ratio: f64,
    },
}

/// A probability density with respect to the Riemannian volume.
#[derive(Debug, Clone)]
pub struct DensityModel {
    manifold: Arc<EmbeddedManifold>,
    shape: DensityShape,
    anchor: Vec<f64>,
    normalizer: f64,
    p_max: f64,
    holder_c: f64,
    holder_kappa: f64,
    normalization_witness: f64,
}

impl DensityModel {
    pub fn uniform(manifold: Arc<EmbeddedManifold>) -> Self {
        let z = manifold.volume();
        Self::finish(manifold, DensityShape::Uniform, z, 1.0 / z, 0.0, 1.0)
    }

    pub fn holder(manifold: Arc<EmbeddedManifold>, kappa: f64, strength: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::argument(format!("Hölder exponent {kappa} outside (0, 1]")));
        }
        if !strength.is_finite() {
            return Err(Error::argument("strength must be finite"));
        }
        let far = 1.0 + strength * manifold.diameter().powf(kappa);
        if far <= 0.0 {
            return Err(Error::argument(format!(
                "strength {strength} makes the density negative at distance {}",
                manifold.diameter()
            )));
        }
        if strength == 0.0 {
            return Ok(Self::uniform(manifold));
        }
        let z = manifold.volume() + strength * manifold.distance_moment(kappa);
        let p_max = far.max(1.0) / z;
        Ok(Self::finish(manifold, DensityShape::Holder { kappa, strength }, z, p_max, strength.abs() / z, kappa))
    }

    /// Piecewise constant with a jump across the hyperplane of the first ambient coordinate.
    /// Not Hölder continuous; `holder_c` is infinite.
    pub fn hemisphere(manifold: Arc<EmbeddedManifold>, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::argument(format!("hemisphere ratio {ratio} must be positive")));
        }
        let grid = manifold.quadrature_grid(manifold.reference_resolution())?;
        let shape = DensityShape::Hemisphere { ratio };
        let mut buf = vec![0.0; manifold.ambient_dim()];
        let z = grid.integrate(|p| hemisphere_value(&manifold, ratio, p, &mut buf));
        Ok(Self::finish(manifold, shape, z, ratio.max(1.0) / z, f64::INFINITY, 1.0))
    }

    /// `uniform`, `holder:kappa=..,strength=..` or `hemisphere:ratio=..`.
    pub fn from_descriptor(manifold: Arc<EmbeddedManifold>, raw: &str) -> Result<Self> {
        let desc = Descriptor::parse(raw)?;
        let wrap = |e: Error| match e {
            Error::Argument(m) => Error::config(format!("density `{raw}`: {m}")),
            other => other,
        };
        match desc.name() {
            "uniform" => {
                desc.expect_keys(&[])?;
                Ok(Self::uniform(manifold))
            }
            "holder" => {
                desc.expect_keys(&["kappa", "strength"])?;
                let kappa = desc.f64_or("kappa", 1.0)?;
                let strength = desc.f64_or("strength", 0.5)?;
                Self::holder(manifold, kappa, strength).map_err(wrap)
            }
            "hemisphere" => {
                desc.expect_keys(&["ratio"])?;
                Self::hemisphere(manifold, desc.f64_or("ratio", 3.0)?).map_err(wrap)
            }
            other => Err(Error::config(format!("unknown density `{other}`"))),
        }
    }

    fn finish(
        manifold: Arc<EmbeddedManifold>,
        shape: DensityShape,
        normalizer: f64,
        p_max: f64,
        holder_c: f64,
        holder_kappa: f64,
    ) -> Self {
        let anchor = manifold.default_anchor();
        let mut model = DensityModel {
            manifold,
            shape,
            anchor,
            normalizer,
            p_max,
            holder_c,
            holder_kappa,
            normalization_witness: f64::NAN,
        };
        let grid = model
            .manifold
            .quadrature_grid(model.manifold.reference_resolution())
            .expect("reference resolution is valid");
        model.normalization_witness = grid.integrate(|p| model.evaluate(p));
        model
    }

    pub fn manifold(&self) -> &Arc<EmbeddedManifold> {
        &self.manifold
    }

    pub fn shape(&self) -> DensityShape {
        self.shape
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// P at a parameter point. The point is not validated.
    pub fn evaluate(&self, p: &[f64]) -> f64 {
        match self.shape {
            DensityShape::Uniform => 1.0 / self.normalizer,
            DensityShape::Holder { kappa, strength } => {
                let r = self.manifold.geodesic_unchecked(p, &self.anchor);
                (1.0 + strength * r.powf(kappa)) / self.normalizer
            }
            DensityShape::Hemisphere { ratio } => {
                let mut buf = vec![0.0; self.manifold.ambient_dim()];
                hemisphere_value(&self.manifold, ratio, p, &mut buf) / self.normalizer
            }
        }
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn holder_c(&self) -> f64 {
        self.holder_c
    }

    pub fn holder_kappa(&self) -> f64 {
        self.holder_kappa
    }

    /// ∫ P dV on the reference quadrature grid.
    pub fn normalization_witness(&self) -> f64 {
        self.normalization_witness
    }

    /// Expected fraction of accepted proposals.
    pub fn predicted_acceptance(&self) -> f64 {
        1.0 / (self.p_max * self.manifold.volume())
    }

    pub fn descriptor(&self) -> String {
        match self.shape {
            DensityShape::Uniform => "uniform".into(),
            DensityShape::Holder { kappa, strength } => format!("holder:kappa={kappa},strength={strength}"),
            DensityShape::Hemisphere { ratio } => format!("hemisphere:ratio={ratio}"),
        }
    }
}

fn hemisphere_value(m: &EmbeddedManifold, ratio: f64, p: &[f64], buf: &mut [f64]) -> f64 {
    m.embed_into(p, buf);
    if buf[0] >= 0.0 {
        ratio
    } else {
        1.0
    }
}

/// i.i.d. points stored flat with stride `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    points: Vec<f64>,
    dim: usize,
    pub seed: u64,
    pub stream: u64,
    /// Uniform proposals drawn to produce the accepted points.
    pub proposals: u64,
    pub density: String,
}

impl SampleSet {
    pub fn from_points(points: Vec<f64>, dim: usize, density: impl Into<String>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(Error::argument(format!(
                "{} coordinates do not split into points of dimension {dim}",
                points.len()
            )));
        }
        Ok(SampleSet { points, dim, seed: 0, stream: 0, proposals: 0, density: density.into() })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.len() as f64 / self.proposals as f64
    }
}

/// Draws n points on stream 0.
pub fn sample(density: &DensityModel, n: usize, seed: u64) -> Result<SampleSet> {
    sample_stream(density, n, seed, 0)
}

/// Draws n points by rejection from the uniform proposal on the given stream.
pub fn sample_stream(density: &DensityModel, n: usize, seed: u64, stream: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::argument("sample size must be at least 1"));
    }
    if density.predicted_acceptance() < MIN_ACCEPTANCE {
        return Err(Error::config(format!(
            "predicted acceptance rate {:.2e} is below {MIN_ACCEPTANCE:e}",
            density.predicted_acceptance()
        )));
    }
    let m = density.manifold();
    let dim = m.param_dim();
    let uniform = matches!(density.shape, DensityShape::Uniform);
    let mut rng = stream_rng(seed, stream);
    let mut points = Vec::with_capacity(n * dim);
    let mut proposals = 0u64;
    while points.len() < n * dim {
        let start = points.len();
        m.sample_uniform(&mut rng, &mut points);
        proposals += 1;
        let u: f64 = rng.random();
        if !uniform && u * density.p_max > density.evaluate(&points[start..]) {
            points.truncate(start);
        }
        if proposals == ACCEPTANCE_PROBE && ((points.len() / dim) as f64) < MIN_ACCEPTANCE * proposals as f64 {
            return Err(Error::config(format!(
                "acceptance rate fell below {MIN_ACCEPTANCE:e} after {proposals} proposals"
            )));
        }
    }
    Ok(SampleSet { points, dim, seed, stream, proposals, density: density.descriptor() })
}
