//! Convergence experiments: error channels over (n, ε) sweeps and log-log rate fits.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{expected_kde, Bandwidth, Estimator, EstimatorKernel, Quadrature};
use crate::geometry::EmbeddedManifold;
use crate::sampling::{sample_stream, DensityModel};

/// Bandwidth schedule ε_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    Fixed(f64),
    /// One ε per entry of `n_list`.
    Explicit(Vec<f64>),
    /// c · n^{−β}.
    Power {
        c: f64,
        beta: f64,
    },
    /// c · (ln n / n)^β.
    LogPower {
        c: f64,
        beta: f64,
    },
}

impl BandwidthRule {
    pub fn eps_for(&self, index: usize, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            BandwidthRule::Fixed(e) => *e,
            BandwidthRule::Explicit(v) => v[index],
            BandwidthRule::Power { c, beta } => c * nf.powf(-beta),
            BandwidthRule::LogPower { c, beta } => c * (nf.ln() / nf).powf(*beta),
        }
    }
}

/// A convergence sweep. Serialized as a flat key/value document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub manifold: String,
    #[serde(default = "default_density")]
    pub density: String,
    pub kernel: String,
    /// Optional check on the flavor inferred from `kernel`: isotropic, chart or pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
    pub n_list: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    /// `power` or `log-power`, used with `eps_c` and `eps_beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_beta: Option<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Resolution of the evaluation and L1 quadrature grid.
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_density() -> String {
    "uniform".into()
}

fn default_replicates() -> usize {
    1
}

impl ExperimentPlan {
    pub fn bandwidth_rule(&self) -> Result<BandwidthRule> {
        let given = [self.eps.is_some(), self.eps_list.is_some(), self.eps_rule.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(Error::config("plan needs exactly one of eps, eps_list, eps_rule"));
        }
        if let Some(e) = self.eps {
            return Ok(BandwidthRule::Fixed(e));
        }
        if let Some(v) = &self.eps_list {
            if v.len() != self.n_list.len() {
                return Err(Error::config("eps_list and n_list differ in length"));
            }
            return Ok(BandwidthRule::Explicit(v.clone()));
        }
        let c = self.eps_c.unwrap_or(1.0);
        let beta = self.eps_beta.ok_or_else(|| Error::config("eps_rule needs eps_beta"))?;
        if !(beta > 0.0) || !(c > 0.0) {
            return Err(Error::config("eps_beta and eps_c must be positive"));
        }
        match self.eps_rule.as_deref() {
            Some("power") => Ok(BandwidthRule::Power { c, beta }),
            Some("log-power") => Ok(BandwidthRule::LogPower { c, beta }),
            Some(other) => Err(Error::config(format!("unknown eps_rule `{other}`"))),
            None => unreachable!(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list[0] == 0 {
            return Err(Error::config("n_list must be nonempty with positive entries"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_list must be strictly increasing"));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates must be at least 1"));
        }
        let rule = self.bandwidth_rule()?;
        for (i, &n) in self.n_list.iter().enumerate() {
            Bandwidth::new(rule.eps_for(i, n)).map_err(|e| Error::config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_str(text).map_err(|e| Error::config(format!("plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }
}

/// One (n, replicate) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub eps: f64,
    pub replicate: usize,
    pub sup_err: f64,
    pub l1_err: f64,
    pub sup_var: f64,
    pub sup_bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Slopes of replicate medians. Entries are absent when a fit is undefined.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateFits {
    pub sup_err_vs_n: Option<RateFit>,
    pub l1_err_vs_n: Option<RateFit>,
    pub sup_var_vs_n: Option<RateFit>,
    pub sup_bias_vs_n: Option<RateFit>,
    pub sup_err_vs_eps: Option<RateFit>,
    pub l1_err_vs_eps: Option<RateFit>,
    pub sup_var_vs_eps: Option<RateFit>,
    pub sup_bias_vs_eps: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fits: RateFits,
    pub grid_resolution: usize,
    pub grid_points: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    SupErr,
    L1Err,
    SupVar,
    SupBias,
}

impl RateRow {
    pub fn channel(&self, c: Channel) -> f64 {
        match c {
            Channel::SupErr => self.sup_err,
            Channel::L1Err => self.l1_err,
            Channel::SupVar => self.sup_var,
            Channel::SupBias => self.sup_bias,
        }
    }
}

impl RateReport {
    /// (n, ε, median over replicates) in increasing n.
    pub fn medians(&self, c: Channel) -> Vec<(usize, f64, f64)> {
        let mut ns: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let cell: Vec<&RateRow> = self.rows.iter().filter(|r| r.n == n).collect();
                let vals: Vec<f64> = cell.iter().map(|r| r.channel(c)).collect();
                (n, cell[0].eps, median(&vals))
            })
            .collect()
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// OLS of log error on log scale.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::argument(format!("rate fit needs at least 3 pairs, got {}", pairs.len())));
    }
    if pairs.iter().any(|(s, e)| !(*s > 0.0) || !(*e > 0.0)) {
        return Err(Error::argument("rate fit needs positive scales and errors"));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::argument("rate fit needs at least two distinct scales"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(RateFit { slope, intercept, stderr })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
                j += 1;
            }
            let avg = 0.5 * (i + j) as f64 + 1.0;
            for &o in &order[i..=j] {
                r[o] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let k = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / k, ry.iter().sum::<f64>() / k);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Evaluation points, quadrature weights and exact density values.
struct EvaluationGrid {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    exact: Vec<f64>,
}

fn evaluation_grid(manifold: &EmbeddedManifold, density: &DensityModel, resolution: usize) -> Result<EvaluationGrid> {
    let g = manifold.quadrature_grid(resolution)?;
    let points: Vec<Vec<f64>> = (0..g.len()).map(|i| g.point(i).to_vec()).collect();
    let exact = points.iter().map(|p| density.evaluate(p)).collect();
    Ok(EvaluationGrid { points, weights: g.weights().to_vec(), exact })
}

/// Evaluation grid resolution used when a plan leaves `grid` unset.
pub fn default_grid_resolution(manifold: &EmbeddedManifold) -> usize {
    match manifold.intrinsic_dim() {
        1 => 100,
        2 => 16,
        _ => 8,
    }
}

/// Everything `run_experiment` resolves from a plan's strings.
#[derive(Debug, Clone)]
pub struct ResolvedPlan {
    pub manifold: Arc<EmbeddedManifold>,
    pub density: DensityModel,
    pub rule: BandwidthRule,
    pub grid_resolution: usize,
}

pub fn resolve_plan(plan: &ExperimentPlan) -> Result<ResolvedPlan> {
    plan.validate()?;
    let manifold = Arc::new(EmbeddedManifold::from_descriptor(&plan.manifold)?);
    let density = DensityModel::from_descriptor(manifold.clone(), &plan.density)?;
    let rule = plan.bandwidth_rule()?;
    let flavor = EstimatorKernel::from_descriptor(&plan.kernel, &manifold, rule.eps_for(0, plan.n_list[0]))?.flavor();
    if let Some(want) = &plan.estimator {
        if want != flavor {
            return Err(Error::config(format!(
                "estimator `{want}` does not match the {flavor} kernel `{}`",
                plan.kernel
            )));
        }
    }
    let grid_resolution = plan.grid.unwrap_or_else(|| default_grid_resolution(&manifold));
    Ok(ResolvedPlan { manifold, density, rule, grid_resolution })
}

/// Runs every (n, replicate) cell. Replicate r of the i-th sample size reads stream (i << 32) | r.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<RateReport> {
    let resolved = resolve_plan(plan)?;
    let ResolvedPlan { manifold, density, rule, grid_resolution } = &resolved;
    let grid = evaluation_grid(manifold, density, *grid_resolution)?;
    let mut warnings = Vec::new();

    // Deterministic expectations, one per sample size.
    let mut estimators = Vec::with_capacity(plan.n_list.len());
    let mut expected = Vec::with_capacity(plan.n_list.len());
    for (i, &n) in plan.n_list.iter().enumerate() {
        let eps = Bandwidth::new(rule.eps_for(i, n))?;
        if let Some(w) = eps.warning(manifold) {
            warnings.push(format!("n={n}: {w}"));
        }
        let kernel = EstimatorKernel::from_descriptor(&plan.kernel, manifold, eps.value())?;
        let ex: Vec<f64> = grid
            .points
            .par_iter()
            .map(|x| expected_kde(&kernel, eps, x, density, Quadrature::Auto))
            .collect::<Result<_>>()
            .map_err(|e| e.context(format!("expected value at n={n}")))?;
        estimators.push(Estimator::new(manifold.clone(), kernel, eps));
        expected.push(ex);
    }

    let cells: Vec<(usize, usize)> =
        (0..plan.n_list.len()).flat_map(|i| (0..plan.replicates).map(move |r| (i, r))).collect();
    let rows = cells
        .par_iter()
        .map(|&(i, r)| {
            let n = plan.n_list[i];
            run_cell(&estimators[i], density, &grid, &expected[i], n, plan.seed, ((i as u64) << 32) | r as u64)
                .map(|mut row| {
                    row.replicate = r;
                    row
                })
                .map_err(|e| e.context(format!("n={n}, replicate={r}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let report = RateReport {
        fits: fit_all(&rows),
        rows,
        grid_resolution: *grid_resolution,
        grid_points: grid.points.len(),
        warnings,
    };
    Ok(report)
}

fn run_cell(
    estimator: &Estimator,
    density: &DensityModel,
    grid: &EvaluationGrid,
    expected: &[f64],
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<RateRow> {
    let samples = sample_stream(density, n, seed, stream)?;
    let prepared = estimator.prepare(samples)?;
    let values = estimator.estimate_many(&prepared, &grid.points)?;
    let mut row = RateRow {
        n,
        eps: estimator.bandwidth().value(),
        replicate: 0,
        sup_err: 0.0,
        l1_err: 0.0,
        sup_var: 0.0,
        sup_bias: 0.0,
    };
    for (j, &k) in values.iter().enumerate() {
        let p = grid.exact[j];
        let e = expected[j];
        row.sup_err = row.sup_err.max((k - p).abs());
        row.sup_var = row.sup_var.max((k - e).abs());
        row.sup_bias = row.sup_bias.max((e - p).abs());
        row.l1_err += (k - p).abs() * grid.weights[j];
    }
    Ok(row)
}

fn fit_all(rows: &[RateRow]) -> RateFits {
    let probe = RateReport {
        rows: rows.to_vec(),
        fits: RateFits::default(),
        grid_resolution: 0,
        grid_points: 0,
        warnings: vec![],
    };
    let fit = |c: Channel, by_eps: bool| {
        let meds = probe.medians(c);
        let pairs: Vec<(f64, f64)> = meds.iter().map(|&(n, e, v)| (if by_eps { e } else { n as f64 }, v)).collect();
        fit_rate(&pairs).ok()
    };
    RateFits {
        sup_err_vs_n: fit(Channel::SupErr, false),
        l1_err_vs_n: fit(Channel::L1Err, false),
        sup_var_vs_n: fit(Channel::SupVar, false),
        sup_bias_vs_n: fit(Channel::SupBias, false),
        sup_err_vs_eps: fit(Channel::SupErr, true),
        l1_err_vs_eps: fit(Channel::L1Err, true),
        sup_var_vs_eps: fit(Channel::SupVar, true),
        sup_bias_vs_eps: fit(Channel::SupBias, true),
    }
}

/// Slope of the median sup|K_n − E K_n| against n for a fixed-bandwidth plan.
pub fn variance_channel(plan: &ExperimentPlan) -> Result<(RateReport, RateFit)> {
    if plan.eps.is_none() {
        return Err(Error::config("the variance channel needs a fixed eps"));
    }
    let report = run_experiment(plan)?;
    let pairs: Vec<(f64, f64)> = report.medians(Channel::SupVar).iter().map(|&(n, _, v)| (n as f64, v)).collect();
    let fit = fit_rate(&pairs)?;
    Ok((report, fit))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub eps: Vec<f64>,
    pub sup_bias: Vec<f64>,
    /// Absent when the channel is flat (all biases below 1e-12) or fewer than 3 bandwidths.
    pub fit: Option<RateFit>,
}

/// sup over the grid of |E K_n − P| for each ε, by quadrature only.
pub fn bias_channel(
    density: &DensityModel,
    kernel_descriptor: &str,
    eps_list: &[f64],
    grid_resolution: usize,
) -> Result<BiasReport> {
    let manifold = density.manifold();
    let grid = evaluation_grid(manifold, density, grid_resolution)?;
    let mut sup_bias = Vec::with_capacity(eps_list.len());
    for &e in eps_list {
        let eps = Bandwidth::new(e)?;
        let kernel = EstimatorKernel::from_descriptor(kernel_descriptor, manifold, e)?;
        if let EstimatorKernel::Isotropic(k) = &kernel {
            if !k.is_compact() {
                return Err(Error::config("the bias channel needs a compactly supported kernel"));
            }
            if e * k.support_radius() > manifold.injectivity_radius() {
                return Err(Error::config(format!(
                    "ε·ρ = {} exceeds the injectivity radius {}",
                    e * k.support_radius(),
                    manifold.injectivity_radius()
                )));
            }
        }
        let worst = grid
            .points
            .par_iter()
            .zip(grid.exact.par_iter())
            .map(|(x, p)| expected_kde(&kernel, eps, x, density, Quadrature::Auto).map(|v| (v - p).abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        sup_bias.push(worst);
    }
    let flat = sup_bias.iter().all(|b| *b < 1e-12);
    let fit = if flat || eps_list.len() < 3 {
        None
    } else {
        Some(fit_rate(&eps_list.iter().copied().zip(sup_bias.iter().copied()).collect::<Vec<_>>())?)
    };
    Ok(BiasReport { eps: eps_list.to_vec(), sup_bias, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Table {
    pub n: Vec<usize>,
    pub eps: Vec<f64>,
    pub median_l1: Vec<f64>,
    /// Rank correlation of median L1 error with n; negative for a decreasing trend.
    pub spearman: f64,
    pub warnings: Vec<String>,
}

/// Median L1 error per n for a pair-kernel plan, with a monotone-trend statistic.
pub fn l1_channel(plan: &ExperimentPlan) -> Result<L1Table> {
    let resolved = resolve_plan(plan)?;
    let d = resolved.manifold.intrinsic_dim() as f64;
    let mut warnings = Vec::new();
    let mut conditions = Vec::new();
    for (i, &n) in plan.n_list.iter().enumerate() {
        let e = resolved.rule.eps_for(i, n);
        let kernel = EstimatorKernel::from_descriptor(&plan.kernel, &resolved.manifold, e)?;
        let EstimatorKernel::Pair(p) = &kernel else {
            return Err(Error::config("the L1 channel needs a pair kernel"));
        };
        let alpha = p.blowup_exponent();
        conditions.push((n as f64).ln() / (n as f64 * e.powf(2.0 * alpha - d)));
    }
    if conditions.len() >= 2 && conditions.windows(2).any(|w| w[1] >= w[0]) {
        warnings.push("ln n / (n ε^(2α−d)) does not decrease along the schedule".to_string());
    }
    let report = run_experiment(plan)?;
    let meds = report.medians(Channel::L1Err);
    let ns: Vec<f64> = meds.iter().map(|m| m.0 as f64).collect();
    let ls: Vec<f64> = meds.iter().map(|m| m.2).collect();
    warnings.extend(report.warnings.iter().cloned());
    Ok(L1Table {
        n: meds.iter().map(|m| m.0).collect(),
        eps: meds.iter().map(|m| m.1).collect(),
        spearman: spearman(&ns, &ls),
        median_l1: ls,
        warnings,
    })
}
