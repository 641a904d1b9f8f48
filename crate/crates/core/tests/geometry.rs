use std::f64::consts::{PI, TAU};

use manifold_kde::geometry::{EmbeddedManifold, FatCantorCurve, FatCantorCurveParams};
use manifold_kde::sampling::stream_rng;
use proptest::prelude::*;
use rand::Rng;

fn unit(v: [f64; 3]) -> Option<Vec<f64>> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 1e-3).then(|| v.iter().map(|c| c / n).collect())
}

fn shipped() -> Vec<EmbeddedManifold> {
    vec![
        EmbeddedManifold::circle(),
        EmbeddedManifold::sphere(2).unwrap(),
        EmbeddedManifold::sphere(3).unwrap(),
        EmbeddedManifold::torus(2).unwrap(),
        EmbeddedManifold::fat_cantor(FatCantorCurveParams::smith_volterra(6, 0.05)).unwrap(),
    ]
}

fn random_point(m: &EmbeddedManifold, rng: &mut impl Rng) -> Vec<f64> {
    let mut out = Vec::new();
    m.sample_uniform(rng, &mut out);
    out
}

proptest! {
    #[test]
    fn chord_never_exceeds_arc(a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0)) {
        let (Some(x), Some(y)) = (unit(a), unit(b)) else { return Ok(()) };
        let s = EmbeddedManifold::sphere(2).unwrap();
        let chord = s.ambient_distance(&x, &y).unwrap();
        let arc = s.geodesic_distance(&x, &y).unwrap();
        prop_assert!(chord <= arc + 1e-12);
        if arc > 1e-6 {
            prop_assert!(chord < arc);
        }
    }

    #[test]
    fn circle_chord_matches_closed_form(s in 0.0f64..TAU, t in 0.0f64..TAU) {
        let c = EmbeddedManifold::circle();
        let arc = c.geodesic_distance(&[s], &[t]).unwrap();
        let chord = c.ambient_distance(&[s], &[t]).unwrap();
        prop_assert!((chord - 2.0 * (arc / 2.0).sin()).abs() < 1e-12);
        prop_assert!(chord <= arc + 1e-12);
    }
}

#[test]
fn chord_arc_on_every_manifold() {
    let mut rng = stream_rng(11, 0);
    for m in shipped() {
        for _ in 0..300 {
            let x = random_point(&m, &mut rng);
            let y = random_point(&m, &mut rng);
            let chord = m.ambient_distance(&x, &y).unwrap();
            let arc = m.geodesic_distance(&x, &y).unwrap();
            assert!(chord <= arc + 1e-9, "{}: {chord} > {arc}", m.descriptor());
            assert_eq!(m.ambient_distance(&x, &x).unwrap(), 0.0);
        }
    }
}

#[test]
fn exp_log_round_trip_on_1000_pairs() {
    let mut rng = stream_rng(12, 0);
    for m in shipped() {
        let inj = m.injectivity_radius();
        let mut tested = 0;
        while tested < 1000 {
            let x = random_point(&m, &mut rng);
            let y = random_point(&m, &mut rng);
            if m.geodesic_distance(&x, &y).unwrap() >= 0.95 * inj {
                continue;
            }
            let v = m.log_map(&x, &y).unwrap();
            let back = m.exp_map(&x, &v).unwrap();
            let err = m.ambient_distance(&back, &y).unwrap();
            assert!(err < 1e-9, "{}: round trip error {err}", m.descriptor());
            tested += 1;
        }
    }
}

#[test]
fn sphere_exp_and_log_examples() {
    let s = EmbeddedManifold::sphere(2).unwrap();
    let north = [0.0, 0.0, 1.0];
    let y = s.exp_map(&north, &[PI / 2.0, 0.0]).unwrap();
    assert!(y[2].abs() < 1e-15);
    assert!(s.exp_map(&north, &[0.0, 0.0]).unwrap().iter().zip(north).all(|(a, b)| (a - b).abs() < 1e-15));
    // The log norm is arccos(1 − chord²/2); a chord of √2 is a quarter turn.
    let east = [1.0, 0.0, 0.0];
    let chord = s.ambient_distance(&north, &east).unwrap();
    assert!((chord - 2f64.sqrt()).abs() < 1e-15);
    let v = s.log_map(&north, &east).unwrap();
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    assert!((norm - (1.0 - chord * chord / 2.0).acos()).abs() < 1e-12);
    assert!((norm - PI / 2.0).abs() < 1e-12);
}

#[test]
fn sphere_volume_density_matches_monte_carlo_cap_area() {
    let s = EmbeddedManifold::sphere(2).unwrap();
    let north = [0.0, 0.0, 1.0];
    let u = |t: f64| s.volume_density_in_normal_coords(&north, &[t, 0.0]).unwrap();
    assert!((u(PI / 2.0) - 2.0 / PI).abs() < 1e-15);
    // Area of the geodesic ball of radius r as 2π ∫ U(t) t dt (midpoint rule) against the fraction of
    // uniform points landing in it.
    let r = PI / 2.0;
    let steps = 20_000;
    let h = r / steps as f64;
    let area: f64 = (0..steps).map(|i| (i as f64 + 0.5) * h).map(|t| TAU * u(t) * t * h).sum();
    let mut rng = stream_rng(13, 0);
    let n = 200_000;
    let inside = (0..n).filter(|_| random_point(&s, &mut rng)[2] > r.cos()).count() as f64;
    let p = inside / n as f64;
    let mc = 4.0 * PI * p;
    let se = 4.0 * PI * (p * (1.0 - p) / n as f64).sqrt();
    assert!((area - mc).abs() < 4.0 * se, "{area} vs {mc} ± {se}");
}

#[test]
fn volume_density_small_t_expansion() {
    for d in [2usize, 3] {
        let s = EmbeddedManifold::sphere(d).unwrap();
        let x = s.default_anchor();
        let mut v = vec![0.0; d];
        let t = 1e-3;
        v[0] = t;
        let u = s.volume_density_in_normal_coords(&x, &v).unwrap();
        let coefficient = (u - 1.0) / (t * t);
        let expected = -(d as f64 - 1.0) / 6.0;
        assert!((coefficient - expected).abs() < 1e-5, "d={d}: {coefficient}");
    }
}

#[test]
fn chord_ratio_residuals() {
    let s = EmbeddedManifold::sphere(2).unwrap();
    let r = s.chord_ratio_check(&[0.0, 0.0, 1.0], &[1.0, 0.0], 0.1).unwrap();
    let oracle = (2.0 * 0.05f64.sin() / 0.1 - (1.0 - 0.01 / 24.0)).abs();
    assert!((r - oracle).abs() < 1e-15);
    assert!(r < 1e-6);
    let c = EmbeddedManifold::circle();
    assert!(c.chord_ratio_check(&[1.0], &[1.0], 0.2).unwrap() < 1e-5);
    let small = s.chord_ratio_check(&[0.0, 0.0, 1.0], &[0.0, 1.0], 1e-3).unwrap();
    assert!(small < 1e-12);
}

#[test]
fn quadrature_weights_total_volume() {
    let s = EmbeddedManifold::sphere(2).unwrap();
    for r in [16, 40, 100] {
        let g = s.quadrature_grid(r).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 4.0 * PI).abs() < 1e-5, "resolution {r}");
    }
    let c = EmbeddedManifold::circle();
    let g = c.quadrature_grid(100).unwrap();
    assert_eq!(g.len(), 100);
    assert!(g.weights().iter().all(|w| (w - TAU / 100.0).abs() < 1e-15));
}

#[test]
fn fat_cantor_weights_match_trapezoid_arclength() {
    let m = EmbeddedManifold::fat_cantor(FatCantorCurveParams::smith_volterra(5, 0.05)).unwrap();
    let curve = m.as_curve().unwrap();
    let n = 400_000;
    let h = TAU / n as f64;
    let trapezoid: f64 = (0..n).map(|i| curve.speed(i as f64 * h) * h).sum();
    let g = m.quadrature_grid(8192).unwrap();
    let total: f64 = g.weights().iter().sum();
    assert!((total - trapezoid).abs() < 1e-6 * trapezoid, "{total} vs {trapezoid}");
}

#[test]
fn quadrature_refinement_halves_the_error() {
    // Circle: ∫ 1/(1.5 − cos θ) dθ = 2π/√1.25.
    let c = EmbeddedManifold::circle();
    let f = |p: &[f64]| 1.0 / (1.5 - p[0].cos());
    let exact = TAU / 1.25f64.sqrt();
    let err = |r: usize| (c.quadrature_grid(r).unwrap().integrate(f) - exact).abs();
    assert!(err(16) <= err(8) / 2.0);

    // Sphere: ∫ e^z dA = 4π sinh 1.
    let s = EmbeddedManifold::sphere(2).unwrap();
    let exact = 4.0 * PI * 1f64.sinh();
    let err = |r: usize| (s.quadrature_grid(r).unwrap().integrate(|p: &[f64]| p[2].exp()) - exact).abs();
    assert!(err(16) <= err(8) / 2.0, "{} {}", err(8), err(16));
    assert!(err(32) <= err(16) / 2.0);

    // Flat torus: ∫∫ 1/(1.5 − cos θ₁) · 1/(1.5 − cos θ₂) = (2π/√1.25)².
    let t = EmbeddedManifold::torus(2).unwrap();
    let exact = (TAU / 1.25f64.sqrt()).powi(2);
    let g = |p: &[f64]| 1.0 / ((1.5 - p[0].cos()) * (1.5 - p[1].cos()));
    let err = |r: usize| (t.quadrature_grid(r).unwrap().integrate(g) - exact).abs();
    assert!(err(16) <= err(8) / 2.0);

    // Fat-Cantor curve: ∫ x² ds against a much finer grid.
    let m = EmbeddedManifold::fat_cantor(FatCantorCurveParams::smith_volterra(4, 0.05)).unwrap();
    let h = |p: &[f64]| {
        let e = m.embed(p).unwrap();
        e[0] * e[0]
    };
    let reference = m.quadrature_grid(1 << 16).unwrap().integrate(h);
    let err = |r: usize| (m.quadrature_grid(r).unwrap().integrate(h) - reference).abs();
    assert!(err(512) <= err(256) / 2.0, "{} {}", err(256), err(512));
}

#[test]
fn fat_cantor_bump_vanishes_exactly_on_the_retained_set() {
    let params = FatCantorCurveParams::smith_volterra(7, 0.05);
    let curve = FatCantorCurve::new(params.clone()).unwrap();
    let mut rng = stream_rng(14, 0);
    for &(lo, hi) in curve.retained_intervals() {
        for _ in 0..5 {
            let theta = rng.random_range(lo..=hi);
            assert_eq!(curve.bump(theta), 0.0);
            assert_eq!(curve.radius(theta), 1.0);
        }
    }
    for &(lo, hi) in curve.removed_intervals() {
        assert!(curve.bump(0.5 * (lo + hi)) > 0.0);
    }
    let m = EmbeddedManifold::fat_cantor(params).unwrap();
    let (lo, _) = curve.retained_intervals()[3];
    let p = m.embed(&[lo]).unwrap();
    assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
}

#[test]
fn embedding_examples() {
    let s = EmbeddedManifold::sphere(2).unwrap();
    assert_eq!(s.embed(&[0.0, 0.0, 1.0]).unwrap(), vec![0.0, 0.0, 1.0]);
    let c = EmbeddedManifold::circle();
    let p = c.embed(&[PI]).unwrap();
    assert!((p[0] + 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
    assert!((c.ambient_distance(&[0.0], &[PI]).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn chart_constants() {
    let s = EmbeddedManifold::sphere(2).unwrap();
    let chart = s.build_chart(&[0.0, 0.0, 1.0], 0.5).unwrap();
    assert_eq!(chart.volume_density_at_zero(), 1.0);
    let c = EmbeddedManifold::circle();
    assert_eq!(c.build_chart(&[0.3], 1.0).unwrap().bilipschitz_bound(), 1.0);
    // max over t ≤ 1 of |sin t / t − 1| / t, by brute force.
    let oracle = (1..=100_000).map(|i| i as f64 * 1e-5).map(|t| (t.sin() / t - 1.0).abs() / t).fold(0.0, f64::max);
    let chart = s.build_chart(&[0.0, 0.0, 1.0], 1.0).unwrap();
    let d2 = chart.volume_lip_bound();
    assert!(d2 >= oracle - 1e-12, "{d2} < {oracle}");
    for i in 1..=50 {
        let t = i as f64 / 50.0;
        let u = chart.volume_density(&[t * 0.6, t * 0.8]).unwrap();
        assert!((u - 1.0).abs() <= d2 * t + 1e-12);
    }
}
