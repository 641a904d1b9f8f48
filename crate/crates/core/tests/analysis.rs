use std::f64::consts::TAU;
use std::sync::Arc;

use manifold_kde::analysis::{
    bias_channel, fit_rate, l1_channel, median, run_experiment, variance_channel, Channel, ExperimentPlan,
};
use manifold_kde::geometry::EmbeddedManifold;
use manifold_kde::sampling::{stream_rng, DensityModel};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

const STEP: &str = "step:c=2,a=0,b=1,norm=1";

fn plan(kernel: &str, density: &str, n_list: &[usize], eps: f64, replicates: usize) -> ExperimentPlan {
    ExperimentPlan {
        manifold: "circle".into(),
        density: density.into(),
        kernel: kernel.into(),
        estimator: None,
        n_list: n_list.to_vec(),
        eps: Some(eps),
        eps_list: None,
        eps_rule: None,
        eps_c: None,
        eps_beta: None,
        replicates,
        grid: None,
        seed: 7,
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn rows_obey_the_triangle_decomposition() {
    let mut p = plan(STEP, "holder:kappa=1,strength=0.5", &[500, 2000, 8000], 0.1, 3);
    p.eps = None;
    p.eps_rule = Some("log-power".into());
    p.eps_beta = Some(1.0 / 3.0);
    let report = run_experiment(&p).unwrap();
    assert_eq!(report.rows.len(), 9);
    for r in &report.rows {
        assert!(r.sup_err <= (r.sup_var + r.sup_bias) * (1.0 + 1e-15), "{r:?}");
        assert!(r.l1_err >= 0.0 && r.sup_bias >= 0.0);
    }
    // The bias is pure quadrature, so replicates share it.
    for n in [500, 2000, 8000] {
        let b: Vec<f64> = report.rows.iter().filter(|r| r.n == n).map(|r| r.sup_bias).collect();
        assert!(b.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn reports_do_not_depend_on_the_worker_count() {
    let p = plan("geoball", "hemisphere:ratio=3", &[1000, 4000], 0.1, 3);
    let one = in_pool(1, || run_experiment(&p).unwrap());
    let eight = in_pool(8, || run_experiment(&p).unwrap());
    assert_eq!(one, eight);
    assert_eq!(run_experiment(&p).unwrap(), one);
}

#[test]
fn noisy_power_law_fit() {
    let mut rng = stream_rng(31, 0);
    let pairs: Vec<(f64, f64)> = (0..8)
        .map(|i| {
            let n = 1000.0 * 2f64.powi(i);
            let noise: f64 = StandardNormal.sample(&mut rng);
            (n, n.powf(-1.0 / 3.0) * (1.0 + 0.05 * noise))
        })
        .collect();
    let fit = fit_rate(&pairs).unwrap();
    assert!((fit.slope + 1.0 / 3.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn quadrupling_n_roughly_halves_the_variance() {
    let (report, fit) = variance_channel(&plan(STEP, "uniform", &[1000, 4000, 16000], 0.1, 5)).unwrap();
    let med = report.medians(Channel::SupVar);
    for w in med.windows(2) {
        let ratio = w[1].2 / w[0].2;
        assert!((0.35..=0.7).contains(&ratio), "n {} → {}: ratio {ratio}", w[0].0, w[1].0);
    }
    assert!((-0.65..=-0.35).contains(&fit.slope), "{fit:?}");
}

#[test]
fn uniform_density_has_negligible_bias() {
    let d = DensityModel::uniform(Arc::new(EmbeddedManifold::circle()));
    let report = bias_channel(&d, "uniform:rho=1", &[0.05, 0.02, 0.01], 100).unwrap();
    assert!(report.sup_bias.iter().all(|b| *b < 1e-3), "{:?}", report.sup_bias);
}

#[test]
fn bias_slopes_follow_the_holder_exponent() {
    let circle = Arc::new(EmbeddedManifold::circle());
    let eps = [0.2, 0.1, 0.05, 0.025];
    for (kappa, floor) in [(1.0, 0.8), (0.5, 0.4)] {
        let d = DensityModel::holder(circle.clone(), kappa, 0.5).unwrap();
        let report = bias_channel(&d, STEP, &eps, 100).unwrap();
        let slope = report.fit.unwrap().slope;
        assert!(slope >= floor, "κ={kappa}: slope {slope}");
    }
}

#[test]
fn l1_error_of_the_ball_kernel_decays() {
    let mut p = plan("geoball", "hemisphere:ratio=3", &[1000, 3000, 10_000, 30_000, 100_000], 0.05, 3);
    p.grid = Some(400);
    let table = l1_channel(&p).unwrap();
    assert!(table.spearman < 0.0, "{table:?}");
    let first = table.median_l1[0];
    let last = *table.median_l1.last().unwrap();
    assert!(first >= 3.0 * last, "{first} vs {last}");
    assert!(table.warnings.is_empty(), "{:?}", table.warnings);

    let mut p = plan("geoball", "holder:kappa=1,strength=0.5", &[100_000], 0.05, 3);
    p.grid = Some(400);
    let report = run_experiment(&p).unwrap();
    let l1 = median(&report.rows.iter().map(|r| r.l1_err).collect::<Vec<_>>());
    assert!(l1 < 0.05, "{l1}");
}

#[test]
fn near_diameter_ball_sees_the_average() {
    let circle = Arc::new(EmbeddedManifold::circle());
    let d = DensityModel::holder(circle.clone(), 1.0, 0.5).unwrap();
    let mut p = plan("geoball", "holder:kappa=1,strength=0.5", &[20_000], 3.1, 1);
    p.grid = Some(400);
    let report = run_experiment(&p).unwrap();
    let grid = circle.quadrature_grid(400).unwrap();
    let flat = grid.integrate(|y| (1.0 / TAU - d.evaluate(y)).abs());
    assert!((report.rows[0].l1_err - flat).abs() < 0.02, "{} vs {flat}", report.rows[0].l1_err);
}

#[test]
fn doubling_the_grid_barely_moves_the_sup_error() {
    let mut p = plan(STEP, "holder:kappa=1,strength=0.5", &[20_000], 0.1, 3);
    p.grid = Some(100);
    let coarse = median(&run_experiment(&p).unwrap().rows.iter().map(|r| r.sup_err).collect::<Vec<_>>());
    p.grid = Some(200);
    let fine = median(&run_experiment(&p).unwrap().rows.iter().map(|r| r.sup_err).collect::<Vec<_>>());
    assert!((fine - coarse).abs() < 0.1 * coarse, "{coarse} vs {fine}");
}

proptest! {
    #[test]
    fn exact_power_laws_are_recovered(c in 0.01f64..100.0, slope in -2.0f64..2.0, k in 3usize..10) {
        let pairs: Vec<(f64, f64)> = (0..k).map(|i| {
            let n = 10.0 * 3f64.powi(i as i32);
            (n, c * n.powf(slope))
        }).collect();
        let fit = fit_rate(&pairs).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
    }
}
