//! Kernel zoo with regularity metadata, normalization and partition numbers.

mod partition;
mod profile;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use partition::{
    oscillation_sum, partition_number, partition_number_with, PartitionOptions, PartitionReport, PartitionSearch,
};
pub use profile::{
    irregular_phase, irregular_phase_slope, irregular_time_at_phase, lle_cap_radius, Profile, StepLevel, ValueRange,
};

use crate::error::{Error, Result};
use crate::geometry::unit_sphere_area;
use crate::quad::{self, Integral};

/// Profile below which the irregular kernel's normalization uses a decay bound instead of quadrature.
const IRREGULAR_NORMALIZATION_FLOOR: f64 = 0.40;

/// A radial kernel t ↦ scale · profile(t) with regularity metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropicKernel {
    profile: Profile,
    scale: f64,
    label: String,
}

impl IsotropicKernel {
    pub fn new(profile: Profile, label: impl Into<String>) -> Self {
        IsotropicKernel { profile, scale: 1.0, label: label.into() }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.scale * self.profile.eval(t)
    }

    /// Support radius ρ; for decaying kernels the radius beyond which the decay bound applies.
    pub fn support_radius(&self) -> f64 {
        self.profile.support_radius()
    }

    /// Decay exponent α, `None` for compact support.
    pub fn decay_exponent(&self) -> Option<f64> {
        self.profile.decay_exponent()
    }

    pub fn is_compact(&self) -> bool {
        self.decay_exponent().is_none()
    }

    /// K_sup = sup |K|.
    pub fn k_sup(&self) -> f64 {
        let r = self.profile.range_on(0.0, self.support_radius() + 1.0);
        self.scale.abs() * r.lo.abs().max(r.hi.abs())
    }

    /// Range of K on [t0, t1].
    pub fn oscillation(&self, t0: f64, t1: f64) -> ValueRange {
        self.profile.range_on(t0, t1).scale(self.scale)
    }

    /// The same kernel multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        IsotropicKernel { profile: self.profile.clone(), scale: self.scale * c, label: self.label.clone() }
    }
}

/// Σ c_j χ_[a_j, b_j] from (c, a, b) triples. No normalization is applied.
pub fn make_step_kernel(levels: &[(f64, f64, f64)]) -> Result<IsotropicKernel> {
    if levels.is_empty() {
        return Err(Error::argument("step kernel needs at least one level"));
    }
    let mut out = Vec::with_capacity(levels.len());
    for &(c, a, b) in levels {
        if ![c, a, b].iter().all(|x| x.is_finite()) {
            return Err(Error::argument("step kernel levels must be finite"));
        }
        if b - a < 0.0 {
            return Err(Error::argument(format!("step level [{a}, {b}] has negative length")));
        }
        if a < 0.0 {
            return Err(Error::argument(format!("step level starts at negative radius {a}")));
        }
        out.push(StepLevel { c, a, b });
    }
    let label = format!(
        "step:c={};a={};b={}",
        join(out.iter().map(|l| l.c)),
        join(out.iter().map(|l| l.a)),
        join(out.iter().map(|l| l.b))
    );
    Ok(IsotropicKernel::new(Profile::Step(out), label))
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// d / (|S^{d−1}| ρ^d) · χ_[0, ρ], which integrates to one over R^d.
pub fn make_uniform_kernel(rho: f64, d: usize) -> Result<IsotropicKernel> {
    if !(rho > 0.0 && rho.is_finite()) || d == 0 {
        return Err(Error::argument(format!("uniform kernel needs ρ > 0 and d ≥ 1, got ρ={rho}, d={d}")));
    }
    let c = d as f64 / (unit_sphere_area(d) * rho.powi(d as i32));
    let mut k = make_step_kernel(&[(c, 0.0, rho)])?;
    k.label = format!("uniform:rho={rho}");
    Ok(k)
}

pub fn make_cantor_example_kernel() -> IsotropicKernel {
    IsotropicKernel::new(Profile::Cantor, "cantor")
}

pub fn make_irregular_kernel() -> IsotropicKernel {
    IsotropicKernel::new(Profile::Irregular, "irregular")
}

/// [1 − (aε²/2) t²] χ_[0,1](t).
pub fn make_truncated_quadratic_kernel(eps: f64, a: f64) -> Result<IsotropicKernel> {
    check_lle_eps(eps)?;
    Ok(IsotropicKernel::new(
        Profile::TruncatedQuadratic { b: 0.5 * a * eps * eps },
        format!("quadratic:eps={eps},a={a}"),
    ))
}

pub fn make_truncated_gaussian_kernel(cutoff: f64) -> Result<IsotropicKernel> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::argument(format!("cutoff {cutoff} must be positive")));
    }
    Ok(IsotropicKernel::new(Profile::TruncatedGaussian { cutoff }, format!("gauss:cutoff={cutoff}")))
}

/// The `a` for which the truncated quadratic integrates to one over R^d.
pub fn normalizing_quadratic_a(eps: f64, d: usize) -> f64 {
    let dd = d as f64;
    let b = (dd + 2.0) * (1.0 / dd - 1.0 / unit_sphere_area(d));
    2.0 * b / (eps * eps)
}

fn check_lle_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 2f64.sqrt()) {
        return Err(Error::argument(format!("LLE bandwidth {eps} outside (0, √2)")));
    }
    Ok(())
}

/// Kernel evaluated on chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChartProfile {
    /// A radial profile of the coordinate norm.
    Radial(IsotropicKernel),
    /// A constant on the cube [−R, R]^d.
    Box { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartKernel {
    profile: ChartProfile,
    support_halfwidth: f64,
}

impl ChartKernel {
    pub fn radial(kernel: IsotropicKernel) -> Self {
        let r = kernel.support_radius();
        ChartKernel { profile: ChartProfile::Radial(kernel), support_halfwidth: r }
    }

    pub fn constant_box(value: f64, halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0) {
            return Err(Error::argument("box halfwidth must be positive"));
        }
        Ok(ChartKernel { profile: ChartProfile::Box { value }, support_halfwidth: halfwidth })
    }

    pub fn profile(&self) -> &ChartProfile {
        &self.profile
    }

    /// R, with support contained in [−R, R]^d.
    pub fn support_halfwidth(&self) -> f64 {
        self.support_halfwidth
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match &self.profile {
            ChartProfile::Radial(k) => k.eval(v.iter().map(|x| x * x).sum::<f64>().sqrt()),
            ChartProfile::Box { value } => {
                if v.iter().all(|x| x.abs() <= self.support_halfwidth) {
                    *value
                } else {
                    0.0
                }
            }
        }
    }

    pub fn k_sup(&self) -> f64 {
        match &self.profile {
            ChartProfile::Radial(k) => k.k_sup(),
            ChartProfile::Box { value } => value.abs(),
        }
    }

    /// Range of the kernel over the axis-aligned cube [lo, hi].
    pub fn oscillation_on_cube(&self, lo: &[f64], hi: &[f64]) -> ValueRange {
        match &self.profile {
            ChartProfile::Radial(k) => {
                let (tmin, tmax) = radial_interval(lo, hi);
                k.oscillation(tmin, tmax)
            }
            ChartProfile::Box { value } => {
                let r = self.support_halfwidth;
                let inside = lo.iter().zip(hi).all(|(a, b)| -r <= *a && *b <= r);
                let touches = lo.iter().zip(hi).all(|(a, b)| *a <= r && *b >= -r);
                let mut out = ValueRange::point(if touches { *value } else { 0.0 });
                if !inside {
                    out.include(0.0);
                }
                out
            }
        }
    }
}

/// [min ‖v‖, max ‖v‖] over the cube [lo, hi].
pub fn radial_interval(lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for (&a, &b) in lo.iter().zip(hi) {
        let n = if a <= 0.0 && b >= 0.0 { 0.0 } else { a.abs().min(b.abs()) };
        let f = a.abs().max(b.abs());
        near += n * n;
        far += f * f;
    }
    (near.sqrt(), far.sqrt())
}

/// The LLE kernel on the sphere in its chart form and its radial companion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LleKernel {
    pub eps: f64,
    pub a: f64,
    /// G(w) = K_ε(ε w) on scaled chart coordinates.
    pub chart: ChartKernel,
    /// [1 − (aε²/2) t²] χ_[0,1](t) on chord / ε.
    pub radial: IsotropicKernel,
}

impl LleKernel {
    /// K_ε(v) = [1 − a + a cos‖v‖] on the open ball of radius arccos(1 − ε²/2).
    pub fn cap_kernel(&self, v: &[f64]) -> f64 {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r < lle_cap_radius(self.eps) {
            1.0 - self.a + self.a * r.cos()
        } else {
            0.0
        }
    }
}

pub fn make_lle_sphere_kernel(eps: f64, a: f64) -> Result<LleKernel> {
    check_lle_eps(eps)?;
    if !a.is_finite() {
        return Err(Error::argument("LLE coefficient must be finite"));
    }
    let chart_profile = IsotropicKernel::new(Profile::LleCosine { a, eps }, format!("lle:eps={eps},a={a}"));
    Ok(LleKernel {
        eps,
        a,
        chart: ChartKernel::radial(chart_profile),
        radial: make_truncated_quadratic_kernel(eps, a)?,
    })
}

/// |S^{d−1}| ∫₀^∞ K(t) t^{d−1} dt.
pub fn normalization_integral(kernel: &IsotropicKernel, d: usize) -> Result<f64> {
    normalization_integral_with_error(kernel, d).map(|i| i.value)
}

/// The normalization integral with an absolute error bound. The irregular kernel's bound
/// includes the part below the resolution floor, estimated as zero.
pub fn normalization_integral_with_error(kernel: &IsotropicKernel, d: usize) -> Result<Integral> {
    if d == 0 {
        return Err(Error::argument("dimension must be positive"));
    }
    if let Some(alpha) = kernel.decay_exponent() {
        if alpha <= d as f64 {
            return Err(Error::argument(format!(
                "decay exponent {alpha} does not exceed dimension {d}; the tail diverges"
            )));
        }
    }
    let area = unit_sphere_area(d);
    let weight = |t: f64| if d == 1 { 1.0 } else { t.powi(d as i32 - 1) };
    let raw = match kernel.profile() {
        Profile::Irregular => irregular_radial_integral(d),
        p => {
            let rho = p.support_radius();
            let f = |t: f64| p.eval(t) * weight(t);
            quad::integrate_pieces(f, 0.0, rho, &p.breakpoints(), 1e-14)
        }
    };
    let s = area * kernel.scale();
    Ok(Integral { value: s * raw.value, abs_error: s.abs() * raw.abs_error })
}

fn irregular_radial_integral(d: usize) -> Integral {
    let tau = IRREGULAR_NORMALIZATION_FLOOR;
    let weight = |t: f64| if d == 1 { 1.0 } else { t.powi(d as i32 - 1) };
    let f = |t: f64| Profile::Irregular.eval(t) * weight(t);
    let k_first = (irregular_phase(1.0) / PI).ceil() as u64;
    let k_last = (irregular_phase(tau) / PI).floor() as u64;
    let mut nodes = vec![1.0];
    nodes.extend((k_first..=k_last).map(|k| irregular_time_at_phase(k as f64 * PI)));
    nodes.push(tau);
    let mut total = Integral::ZERO;
    for w in nodes.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        if hi > lo {
            total = total + quad::adaptive_gauss_kronrod(f, lo, hi, 1e-15, 20);
        }
    }
    // Van der Corput: |∫₀^τ ψ sin φ| ≤ 3 (|ψ(τ)| + V(ψ)) / min |φ'| with |φ'| decreasing in t.
    let tail = 3.0 * 2.0 * weight(tau) / irregular_phase_slope(tau);
    Integral { value: total.value, abs_error: total.abs_error + tail }
}

/// Rescales the kernel so the normalization integral is one.
pub fn normalize(kernel: &IsotropicKernel, d: usize) -> Result<IsotropicKernel> {
    let i = normalization_integral(kernel, d)?;
    if i.abs() < 1e-12 {
        return Err(Error::DegenerateKernel(i));
    }
    Ok(kernel.scaled(1.0 / i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_kernels_integrate_to_one() {
        for d in 1..=3 {
            let k = make_uniform_kernel(1.3, d).unwrap();
            assert!((normalization_integral(&k, d).unwrap() - 1.0).abs() < 1e-12);
        }
        let k = make_uniform_kernel(1.0, 2).unwrap();
        assert!((k.eval(0.5) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn step_kernel_errors_and_ksup() {
        assert!(make_step_kernel(&[(1.0, 0.5, 0.2)]).is_err());
        let k = make_step_kernel(&[(2.0, 0.0, 0.5), (-1.0, 0.5, 1.0)]).unwrap();
        assert_eq!(k.k_sup(), 2.0);
    }

    #[test]
    fn cantor_normalization() {
        let k = make_cantor_example_kernel();
        assert!((normalization_integral(&k, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(normalization_integral(&k, 2).is_err());
    }

    #[test]
    fn chi_unit_interval_scaled_by_half() {
        let k = make_step_kernel(&[(1.0, 0.0, 1.0)]).unwrap();
        let n = normalize(&k, 1).unwrap();
        assert!((n.scale() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn truncated_gaussian_scale() {
        let k = make_truncated_gaussian_kernel(3.0).unwrap();
        let n = normalize(&k, 2).unwrap();
        let expected = 1.0 / (PI * (1.0 - (-9.0f64).exp()));
        assert!((n.scale() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn normalized_quadratic() {
        for d in 1..=3 {
            let a = normalizing_quadratic_a(0.5, d);
            let k = make_truncated_quadratic_kernel(0.5, a).unwrap();
            assert!((normalization_integral(&k, d).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn lle_examples() {
        assert!(make_lle_sphere_kernel(1.5, 1.0).is_err());
        let k = make_lle_sphere_kernel(0.5, 0.0).unwrap();
        assert_eq!(k.cap_kernel(&[0.1, 0.2]), 1.0);
        assert_eq!(k.chart.eval(&[0.1, 0.2]), 1.0);
    }

    #[test]
    fn irregular_normalization_is_reported_with_bound() {
        let i = normalization_integral_with_error(&make_irregular_kernel(), 1).unwrap();
        assert!(i.abs_error < 1e-4 * i.value.abs().max(1e-3), "{i:?}");
    }
}
