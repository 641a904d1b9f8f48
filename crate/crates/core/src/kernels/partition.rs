//! Uniform cube partitions of [−H, H]^d and the Riemann oscillation sum of a radial kernel.

use serde::{Deserialize, Serialize};

use super::IsotropicKernel;
use crate::error::{Error, Result};

/// How the cubes-per-axis count is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionSearch {
    /// Doubling until success, then bisection; the reported m always has m − 1 failing.
    Bisection,
    /// m = 1, 2, 3, … until success; the reported m is globally minimal.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionOptions {
    /// Largest total cube count m^d the search may try.
    pub budget: u64,
    pub search: PartitionSearch,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions { budget: 1 << 30, search: PartitionSearch::Bisection }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub gamma: f64,
    pub dimension: usize,
    pub cubes_per_axis: u64,
    /// N = m^d.
    pub cubes: u64,
    pub cube_side: f64,
    /// Σ (M_i − m_i) Vol(Q_i).
    pub osc_sum: f64,
    pub domain_halfwidth: f64,
    /// Number of partitions whose sum was evaluated during the search.
    pub partitions_tested: u32,
}

/// Folded per-axis |v| ranges with multiplicities, ordered from the center outward.
fn folded_axis(halfwidth: f64, m: u64) -> Vec<(f64, f64, u64)> {
    let h = halfwidth;
    let mf = m as f64;
    if m.is_multiple_of(2) {
        (0..m / 2).map(|j| (h * (2 * j) as f64 / mf, h * (2 * j + 2) as f64 / mf, 2)).collect()
    } else {
        let mut out = vec![(0.0, h / mf, 1)];
        out.extend((1..=m / 2).map(|j| (h * (2 * j - 1) as f64 / mf, h * (2 * j + 1) as f64 / mf, 2)));
        out
    }
}

fn multinomial_orbit(indices: &[usize]) -> u64 {
    // d!/Π(run lengths)!
    let d = indices.len();
    let mut orbit: u64 = (1..=d as u64).product();
    let mut run = 1u64;
    for w in indices.windows(2) {
        if w[0] == w[1] {
            run += 1;
            orbit /= run;
        } else {
            run = 1;
        }
    }
    orbit
}

/// Oscillation sum of the radial kernel over the uniform partition of [−H, H]^d with m cubes per axis.
///
/// With `stop_at`, summation ends as soon as the partial sum reaches it; the returned value is then
/// only a lower bound.
pub fn oscillation_sum(kernel: &IsotropicKernel, d: usize, halfwidth: f64, m: u64, stop_at: Option<f64>) -> f64 {
    assert!(d >= 1 && m >= 1);
    let axis = folded_axis(halfwidth, m);
    let cube_vol = (2.0 * halfwidth / m as f64).powi(d as i32);
    let limit = stop_at.unwrap_or(f64::INFINITY);
    let n = axis.len();
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut near2 = 0.0;
        let mut far2 = 0.0;
        let mut mult = multinomial_orbit(&idx);
        for &j in &idx {
            let (a, b, k) = axis[j];
            near2 += a * a;
            far2 += b * b;
            mult *= k;
        }
        let osc = kernel.oscillation(near2.sqrt(), far2.sqrt()).width();
        total += osc * mult as f64 * cube_vol;
        if total >= limit {
            return total;
        }
        // Next non-decreasing index tuple, last axis fastest.
        let mut pos = d;
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            if idx[pos] + 1 < n {
                let v = idx[pos] + 1;
                for slot in &mut idx[pos..] {
                    *slot = v;
                }
                break;
            }
        }
    }
}

pub fn partition_number(kernel: &IsotropicKernel, gamma: f64, d_lip: f64, d: usize) -> Result<PartitionReport> {
    partition_number_with(kernel, gamma, d_lip, d, PartitionOptions::default())
}

pub fn partition_number_with(
    kernel: &IsotropicKernel,
    gamma: f64,
    d_lip: f64,
    d: usize,
    options: PartitionOptions,
) -> Result<PartitionReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::argument(format!("γ = {gamma} outside (0, 1)")));
    }
    if !(d_lip >= 1.0 && d_lip.is_finite()) {
        return Err(Error::argument(format!("D_lip = {d_lip} must be at least 1")));
    }
    if d == 0 {
        return Err(Error::argument("dimension must be positive"));
    }
    let halfwidth = match kernel.decay_exponent() {
        Some(alpha) => d_lip * gamma.powf(-1.0 / alpha),
        None => d_lip * kernel.support_radius(),
    };
    let target = gamma * gamma;
    let mut tested = 0u32;
    let fits = |m: u64| m.checked_pow(d as u32).is_some_and(|n| n <= options.budget);
    let mut check = |m: u64| -> Result<bool> {
        if !fits(m) {
            return Err(Error::PartitionNotFound { budget: options.budget, cubes_per_axis: m });
        }
        tested += 1;
        Ok(oscillation_sum(kernel, d, halfwidth, m, Some(target)) < target)
    };

    let m = match options.search {
        PartitionSearch::Exhaustive => {
            let mut m = 1;
            while !check(m)? {
                m += 1;
            }
            m
        }
        PartitionSearch::Bisection => {
            if check(1)? {
                1
            } else {
                let mut lo = 1;
                let mut hi = 2;
                while !check(hi)? {
                    lo = hi;
                    hi *= 2;
                }
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if check(mid)? {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    };
    Ok(PartitionReport {
        gamma,
        dimension: d,
        cubes_per_axis: m,
        cubes: m.pow(d as u32),
        cube_side: 2.0 * halfwidth / m as f64,
        osc_sum: oscillation_sum(kernel, d, halfwidth, m, None),
        domain_halfwidth: halfwidth,
        partitions_tested: tested,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_step_kernel, make_uniform_kernel};

    #[test]
    fn orbit_sizes() {
        assert_eq!(multinomial_orbit(&[0, 0, 0]), 1);
        assert_eq!(multinomial_orbit(&[0, 0, 1]), 3);
        assert_eq!(multinomial_orbit(&[0, 1, 2]), 6);
        assert_eq!(multinomial_orbit(&[1, 1]), 1);
    }

    #[test]
    fn folded_axis_covers_halfwidth() {
        for m in 1..12 {
            let axis = folded_axis(2.0, m);
            assert_eq!(axis.iter().map(|a| a.2).sum::<u64>(), m);
            assert!((axis.last().unwrap().1 - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_kernel_needs_one_cube() {
        let k = make_uniform_kernel(1.0, 1).unwrap();
        let r = partition_number(&k, 0.1, 1.0, 1).unwrap();
        assert_eq!(r.cubes, 1);
        assert_eq!(r.osc_sum, 0.0);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let k = make_step_kernel(&[(1.0, 0.0, 0.5)]).unwrap();
        let opts = PartitionOptions { budget: 16, search: PartitionSearch::Bisection };
        let err = partition_number_with(&k, 0.01, 1.0, 2, opts).unwrap_err();
        assert!(matches!(err, Error::PartitionNotFound { budget: 16, .. }));
    }
}
