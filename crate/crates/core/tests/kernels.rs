use std::f64::consts::PI;

use manifold_kde::geometry::EmbeddedManifold;
use manifold_kde::kernels::{
    self, make_cantor_example_kernel, make_irregular_kernel, make_lle_sphere_kernel, make_step_kernel,
    make_truncated_gaussian_kernel, make_truncated_quadratic_kernel, make_uniform_kernel, normalize, IsotropicKernel,
    PartitionOptions, PartitionSearch,
};
use manifold_kde::sampling::stream_rng;
use proptest::prelude::*;
use rand::Rng;

/// Oscillation sum over every cube of the uniform partition, without any symmetry folding.
fn brute_osc_sum(k: &IsotropicKernel, d: usize, halfwidth: f64, m: usize) -> f64 {
    let edge = |i: usize| halfwidth * (2.0 * i as f64 - m as f64) / m as f64;
    let vol = (2.0 * halfwidth / m as f64).powi(d as i32);
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let (mut near, mut far) = (0.0, 0.0);
        for &i in &idx {
            let (lo, hi) = (edge(i), edge(i + 1));
            let n = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
            let f = lo.abs().max(hi.abs());
            near += n * n;
            far += f * f;
        }
        total += k.oscillation(near.sqrt(), far.sqrt()).width() * vol;
        let mut j = 0;
        loop {
            if j == d {
                return total;
            }
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn shipped_kernels(d: usize) -> Vec<IsotropicKernel> {
    vec![
        make_uniform_kernel(1.0, d).unwrap(),
        make_step_kernel(&[(2.0, 0.0, 0.5), (-1.0, 0.5, 1.0)]).unwrap(),
        make_cantor_example_kernel(),
        make_truncated_quadratic_kernel(0.5, 1.0).unwrap(),
        make_truncated_gaussian_kernel(3.0).unwrap(),
        make_lle_sphere_kernel(0.5, 1.0).unwrap().radial,
    ]
}

const TIE: f64 = 1e-12;

fn assert_valid_and_minimal(k: &IsotropicKernel, gamma: f64, d: usize) {
    let r = kernels::partition_number(k, gamma, 1.0, d).unwrap();
    let m = r.cubes_per_axis as usize;
    let target = gamma * gamma;
    // Jumps that land exactly on cube edges make osc_sum(m) = γ² up to rounding; the oracle's different
    // summation order may round the other way, so ties are accepted within TIE.
    let osc = brute_osc_sum(k, d, r.domain_halfwidth, m);
    assert!(osc < target * (1.0 + TIE), "{} γ={gamma}: {osc} ≥ {target}", k.label());
    assert!((osc - r.osc_sum).abs() <= 1e-9 * target, "{} γ={gamma}: {osc} vs {}", k.label(), r.osc_sum);
    if m > 1 {
        let coarser = brute_osc_sum(k, d, r.domain_halfwidth, m - 1);
        assert!(coarser >= target * (1.0 - TIE), "{} γ={gamma}: m−1 = {} passes", k.label(), m - 1);
    }
}

#[test]
fn partitions_are_valid_and_minimal_in_one_dimension() {
    for k in shipped_kernels(1) {
        for gamma in [0.2, 0.1, 0.05] {
            assert_valid_and_minimal(&k, gamma, 1);
        }
    }
}

#[test]
fn partitions_are_valid_and_minimal_in_two_dimensions() {
    for k in shipped_kernels(2) {
        assert_valid_and_minimal(&k, 0.2, 2);
    }
    assert_valid_and_minimal(&make_uniform_kernel(1.0, 2).unwrap(), 0.1, 2);
}

#[test]
fn exhaustive_search_finds_the_smallest_count() {
    // D_lip = 1.3711 puts the jump of (1/2)χ_[0,1] inside the domain and off the cube edges.
    let k = make_uniform_kernel(1.0, 1).unwrap();
    let options = PartitionOptions { search: PartitionSearch::Exhaustive, ..PartitionOptions::default() };
    let r = kernels::partition_number_with(&k, 0.1, 1.3711, 1, options).unwrap();
    let smallest = (1..).find(|&m| brute_osc_sum(&k, 1, r.domain_halfwidth, m) < 0.01).unwrap();
    assert_eq!(r.cubes_per_axis as usize, smallest);
    assert!(r.osc_sum < 0.01);
}

#[test]
fn step_kernel_partition_grows_like_inverse_gamma_squared() {
    let k = make_step_kernel(&[(2.0, 0.0, 0.3), (-1.0, 0.3, 0.8)]).unwrap();
    let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&g| {
            let r = kernels::partition_number(&k, g, 1.0, 1).unwrap();
            ((1.0 / (g * g)).ln(), (r.cubes as f64).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((0.8..=1.2).contains(&slope), "exponent {slope}");
}

#[test]
fn polynomial_decay_is_bounded() {
    let k = make_cantor_example_kernel();
    let alpha = k.decay_exponent().unwrap();
    let rho = 1.5;
    let mut rng = stream_rng(21, 0);
    for i in 0..10_000 {
        // Every tenth sample lands on an integer, where the profile spikes.
        let t = if i % 10 == 0 { (2 + i / 10) as f64 } else { rng.random_range(rho..1e4) };
        assert!(k.eval(t).abs() * t.powf(alpha) <= 1.0 + 1e-12, "t={t}");
    }
}

#[test]
fn lle_identity_on_1000_sphere_pairs() {
    let s = EmbeddedManifold::sphere(2).unwrap();
    let mut rng = stream_rng(22, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let eps = rng.random_range(0.05..1.4);
        let a = rng.random_range(0.0..2.0);
        let lle = make_lle_sphere_kernel(eps, a).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        s.sample_uniform(&mut rng, &mut x);
        s.sample_uniform(&mut rng, &mut y);
        let chord = s.ambient_distance(&x, &y).unwrap();
        if s.geodesic_distance(&x, &y).unwrap() >= PI - 1e-6 {
            continue;
        }
        let v = s.log_map(&x, &y).unwrap();
        let diff = (lle.cap_kernel(&v) - lle.radial.eval(chord / eps)).abs();
        worst = worst.max(diff);
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn lle_kernel_examples() {
    assert!((kernels::lle_cap_radius(1.0) - PI / 3.0).abs() < 1e-15);
    let lle = make_lle_sphere_kernel(0.8, 0.0).unwrap();
    for r in [0.0, 0.3, 0.7] {
        assert_eq!(lle.cap_kernel(&[r, 0.0]), 1.0);
    }
}

#[test]
fn quadratic_normalization_solves_the_moment_equation() {
    // ∫_{|v|≤1} (1 − b|v|²) dv = |S^{d−1}| (1/d − b/(d+2)) = 1.
    let sphere_area = |d: usize| match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!(),
    };
    for d in [1usize, 2, 3] {
        let b = (d as f64 + 2.0) * (1.0 / d as f64 - 1.0 / sphere_area(d));
        let eps = 0.5;
        let a = 2.0 * b / (eps * eps);
        assert!((kernels::normalizing_quadratic_a(eps, d) - a).abs() < 1e-12 * a.abs());
        let k = make_truncated_quadratic_kernel(eps, a).unwrap();
        let integral = kernels::normalization_integral(&k, d).unwrap();
        assert!((integral - 1.0).abs() < 1e-8, "d={d}: {integral}");
    }
}

#[test]
fn uniform_kernel_values() {
    let k = make_uniform_kernel(0.7, 2).unwrap();
    assert!((k.eval(0.3) - 1.0 / (PI * 0.49)).abs() < 1e-15);
    assert_eq!(k.eval(0.71), 0.0);
    assert!((kernels::normalization_integral(&k, 2).unwrap() - 1.0).abs() < 1e-10);
    let signed = make_step_kernel(&[(2.0, 0.0, 0.5), (-1.0, 0.5, 1.0)]).unwrap();
    assert_eq!(signed.k_sup(), 2.0);
}

#[test]
fn irregular_kernel_is_bounded_and_oscillates() {
    let k = make_irregular_kernel();
    assert_eq!(k.eval(1.5), 0.0);
    let mut rng = stream_rng(23, 0);
    for _ in 0..10_000 {
        assert!(k.eval(rng.random_range(0.0..2.0)).abs() <= 1.0);
    }
    let n = 200_000;
    let signs = (0..=n)
        .map(|i| k.eval(0.4 + 0.1 * i as f64 / n as f64))
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| w[0] * w[1] < 0.0)
        .count();
    assert!(signs > 10, "{signs}");
}

#[test]
fn irregular_normalization_matches_a_frozen_oracle() {
    // Frozen from an independent float64 quadrature between consecutive zeros of sin(exp(exp(1/t)))
    // on [0.4, 1], doubled for the two sides of the line; the part below 0.4 is under 5e-7.
    let oracle = -0.036_798_630_256;
    let i = kernels::normalization_integral_with_error(&make_irregular_kernel(), 1).unwrap();
    assert!((i.value - oracle).abs() < 1e-6, "{i:?}");
    assert!(i.abs_error < 1e-6, "{i:?}");
}

fn step_strategy() -> impl Strategy<Value = IsotropicKernel> {
    prop::collection::vec((0.1f64..3.0, 0.0f64..1.0, 0.05f64..1.0), 1..4).prop_map(|levels| {
        let levels: Vec<(f64, f64, f64)> = levels.into_iter().map(|(c, a, w)| (c, a, a + w)).collect();
        make_step_kernel(&levels).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_is_idempotent(k in step_strategy(), d in 1usize..=3) {
        let once = normalize(&k, d).unwrap();
        let twice = normalize(&once, d).unwrap();
        for i in 0..1000 {
            let t = 2.2 * i as f64 / 1000.0;
            let (a, b) = (once.eval(t), twice.eval(t));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "t={} {} {}", t, a, b);
        }
        prop_assert!((kernels::normalization_integral(&once, d).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scaling_scales_oscillation(k in step_strategy(), c in -3.0f64..3.0, t0 in 0.0f64..1.0, w in 0.0f64..0.5) {
        let s = k.scaled(c);
        let base = k.oscillation(t0, t0 + w).width();
        prop_assert!((s.oscillation(t0, t0 + w).width() - c.abs() * base).abs() <= 1e-12 * (1.0 + base));
    }
}
