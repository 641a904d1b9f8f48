//! The `kde` command line: flag parsing, config files, dispatch and CSV emission.
//!
//! A config file is a flat JSON object keyed by flag name (`"eps": 0.05`, `"deltas": [0.01, 0.003]`).
//! Its values are applied first and any flag given on the command line replaces them. An output file
//! written by an earlier run is also accepted: the `config` object of its manifest header is used.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{self, ExperimentPlan};
use crate::covering::{self, CoveringProbe};
use crate::error::{Error, Result};
use crate::estimators::{Bandwidth, Estimator, EstimatorKernel, Quadrature};
use crate::geometry::{EmbeddedManifold, ManifoldKind};
use crate::integrability;
use crate::kernels::{self, IsotropicKernel, PartitionOptions, PartitionSearch};
use crate::sampling::{self, DensityModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

const MANIFEST_TITLE: &str = "# kde run manifest";
const SUBCOMMANDS: [&str; 6] = ["eval", "converge", "partition", "integrability", "covering", "geomcheck"];

#[derive(Debug, Parser)]
#[command(name = "kde", version, about = "Kernel density estimation experiments on embedded manifolds")]
pub struct Cli {
    /// Worker threads [default: hardware parallelism].
    #[arg(long, global = true, env = "KDE_WORKERS")]
    pub workers: Option<usize>,
    /// Flat JSON file of flag values, or an earlier output file carrying a manifest header.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a density on a quadrature grid and compare with the truth and the expectation.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Run a convergence plan and report per-replicate errors with fitted slopes.
    #[command(args_override_self = true)]
    Converge(ConvergeArgs),
    /// Smallest uniform partition whose oscillation sum falls below γ².
    #[command(args_override_self = true)]
    Partition(PartitionArgs),
    /// Darboux gaps of the kernel integrand along a curve.
    #[command(args_override_self = true)]
    Integrability(IntegrabilityArgs),
    /// Translate distances against the non-VC bound, and optional greedy packings.
    #[command(args_override_self = true)]
    Covering(CoveringArgs),
    /// Chord-ratio and volume-density diagnostics.
    #[command(args_override_self = true)]
    Geomcheck(GeomcheckArgs),
}

/// Comma-separated reals, kept as one flag value so later occurrences replace earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealList(pub Vec<f64>);

impl FromStr for RealList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(RealList)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Manifold descriptor, e.g. `circle` or `sphere:d=2`.
    #[arg(long)]
    pub manifold: String,
    /// Kernel descriptor, e.g. `uniform:rho=1`.
    #[arg(long)]
    pub kernel: String,
    #[arg(long, default_value = "uniform")]
    pub density: String,
    /// Sample size.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quadrature grid resolution [default: 100, 16 or 8 by dimension].
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvergeArgs {
    /// Flat JSON experiment plan.
    #[arg(long)]
    pub plan: PathBuf,
    /// Replaces the plan's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes PREFIX.dat (n against median sup error) and a PREFIX.gp gnuplot script.
    #[arg(long, value_name = "PREFIX")]
    pub gnuplot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchArg {
    Bisection,
    Exhaustive,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PartitionArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dlip: f64,
    /// Dimension of the chart domain.
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = SearchArg::Bisection)]
    pub search: SearchArg,
    /// Largest cube count tried before giving up.
    #[arg(long, default_value_t = 1 << 30)]
    pub budget: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IntegrabilityArgs {
    /// Curve descriptor: `circle` or `fatcantor:depth=..,amp=..`.
    #[arg(long, default_value = "circle")]
    pub manifold: String,
    #[arg(long, default_value = "cantor")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Finest refinement level; level l has 2^l cells.
    #[arg(long, default_value_t = 12)]
    pub levels: u32,
    #[arg(long, default_value_t = 1)]
    pub first_level: u32,
    /// Ambient point x as `x0,x1`.
    #[arg(long, default_value = "0,0")]
    pub center: RealList,
    /// Gap below which the integrand counts as integrable.
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Also cover the critical set of the distance function at this parameter step.
    #[arg(long)]
    pub critical_h: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoveringArgs {
    #[arg(long, default_value = "irregular")]
    pub kernel: String,
    /// Offsets δ for the witness pairs (a, a + δ).
    #[arg(long, default_value = "0.01,0.003")]
    pub deltas: RealList,
    #[arg(long, default_value_t = 10)]
    pub anchors: usize,
    /// Metric radii for greedy packings.
    #[arg(long)]
    pub packing: Option<RealList>,
    /// Packing candidates per unit of 1/ε.
    #[arg(long, default_value_t = 10.0)]
    pub grid_factor: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub packing_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GeomcheckArgs {
    #[arg(long, default_value = "sphere:d=2")]
    pub manifold: String,
    /// Geodesic length for the chord-ratio check.
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    /// Finite-difference step for the volume-density coefficient.
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Flag values; feeding this object back through `--config` repeats the run.
    pub config: Value,
    /// Everything the flags resolved to, such as the contents of a plan file.
    pub resolved: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub workers: usize,
    pub duration_seconds: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// The manifest as `#` comment lines.
    pub fn header(&self) -> String {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        let mut s = String::from(MANIFEST_TITLE);
        s.push('\n');
        for line in json.lines() {
            let _ = writeln!(s, "# {line}");
        }
        s
    }

    /// Reads the manifest back from the leading comment block of an output file.
    pub fn from_header(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(MANIFEST_TITLE) {
            return Err(Error::config("file does not start with a run manifest"));
        }
        let json: String = lines.map_while(|l| l.strip_prefix("# ")).collect::<Vec<_>>().join("\n");
        serde_json::from_str(&json).map_err(|e| Error::config(format!("manifest header: {e}")))
    }
}

/// Non-comment lines of an output file: the part that must repeat byte for byte.
pub fn data_section(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).fold(String::new(), |mut s, l| {
        s.push_str(l);
        s.push('\n');
        s
    })
}

/// 17 significant digits, enough to round-trip any f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Emitted {
    out: Option<PathBuf>,
    data: String,
    trailer: String,
}

struct Outcome {
    seed: Option<u64>,
    resolved: Value,
    files: Vec<Emitted>,
    summary: Vec<String>,
    /// Set when a diagnostic ran but its check failed; reported after the outputs are written.
    failure: Option<String>,
}

impl Outcome {
    fn new(resolved: Value) -> Self {
        Outcome { seed: None, resolved, files: Vec::new(), summary: Vec::new(), failure: None }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("kde: {e}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("kde: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_CONFIG
            }
        }
    }
}

/// Splices the flags stored in a `--config` file right after the subcommand name.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<Option<&str>> = argv.iter().map(|a| a.to_str()).collect();
    let mut path = None;
    for (i, s) in strs.iter().enumerate() {
        match s {
            Some("--config") => path = strs.get(i + 1).copied().flatten(),
            Some(s) if s.starts_with("--config=") => path = Some(&s["--config=".len()..]),
            _ => {}
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let Some(at) = (1..strs.len()).find(|&i| {
        let prev = strs[i - 1];
        strs[i].is_some_and(|s| SUBCOMMANDS.contains(&s)) && !matches!(prev, Some("--config") | Some("--workers"))
    }) else {
        return Ok(argv);
    };
    let tokens = config_tokens(Path::new(path))?;
    let mut out = argv[..=at].to_vec();
    out.extend(tokens.into_iter().map(OsString::from));
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

fn config_tokens(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("config {}: {e}", path.display())))?;
    let object = if text.starts_with('#') {
        RunManifest::from_header(&text)?.config
    } else {
        serde_json::from_str(&text).map_err(|e| Error::config(format!("config {}: {e}", path.display())))?
    };
    let Value::Object(map) = object else {
        return Err(Error::config("config must be a flat JSON object"));
    };
    let scalar = |key: &str, v: &Value| -> Result<String> {
        match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(Error::config(format!("config key `{key}` must hold a string, number or list"))),
        }
    };
    let mut tokens = Vec::new();
    for (key, value) in &map {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => tokens.push(flag),
            Value::Array(items) => {
                let parts = items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>>>()?;
                tokens.push(flag);
                tokens.push(parts.join(","));
            }
            v => {
                tokens.push(flag);
                tokens.push(scalar(key, v)?);
            }
        }
    }
    Ok(tokens)
}

fn execute(cli: &Cli) -> Result<()> {
    let workers = match cli.workers {
        Some(0) => return Err(Error::config("--workers must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let (name, config, outcome) = pool.install(|| -> Result<_> {
        Ok(match &cli.command {
            Command::Eval(a) => ("eval", to_value(a), eval(a)?),
            Command::Converge(a) => ("converge", to_value(a), converge(a)?),
            Command::Partition(a) => ("partition", to_value(a), partition(a)?),
            Command::Integrability(a) => ("integrability", to_value(a), integrability_cmd(a)?),
            Command::Covering(a) => ("covering", to_value(a), covering_cmd(a)?),
            Command::Geomcheck(a) => ("geomcheck", to_value(a), geomcheck(a)?),
        })
    })?;
    let manifest = RunManifest {
        subcommand: name.to_string(),
        config,
        resolved: outcome.resolved,
        seed: outcome.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        workers,
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: outcome.files.iter().filter_map(|f| f.out.as_ref().map(|p| p.display().to_string())).collect(),
    };
    let header = manifest.header();
    for f in &outcome.files {
        let text = format!("{header}{}{}", f.data, f.trailer);
        match &f.out {
            Some(p) => {
                std::fs::write(p, text).map_err(|e| Error::config(format!("cannot write {}: {e}", p.display())))?
            }
            None => print!("{text}"),
        }
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    match outcome.failure {
        Some(msg) => Err(Error::Numerical(msg)),
        None => Ok(()),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("arguments serialize")
}

fn isotropic_kernel(raw: &str, manifold: &EmbeddedManifold, eps: f64) -> Result<IsotropicKernel> {
    match EstimatorKernel::from_descriptor(raw, manifold, eps)? {
        EstimatorKernel::Isotropic(k) => Ok(k),
        other => {
            Err(Error::config(format!("kernel `{raw}` is a {} kernel; an isotropic one is needed", other.flavor())))
        }
    }
}

fn eval(a: &EvalArgs) -> Result<Outcome> {
    if a.n == 0 {
        return Err(Error::config("--n must be positive"));
    }
    let manifold = Arc::new(EmbeddedManifold::from_descriptor(&a.manifold)?);
    let density = DensityModel::from_descriptor(manifold.clone(), &a.density)?;
    let eps = Bandwidth::new(a.eps)?;
    if let Some(w) = eps.warning(&manifold) {
        eprintln!("kde: warning: {w}");
    }
    let kernel = EstimatorKernel::from_descriptor(&a.kernel, &manifold, a.eps)?;
    let estimator = Estimator::new(manifold.clone(), kernel, eps);
    let resolution = a.grid.unwrap_or_else(|| analysis::default_grid_resolution(&manifold));
    let grid = manifold.quadrature_grid(resolution)?;
    let points: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.point(i).to_vec()).collect();

    let samples = sampling::sample(&density, a.n, a.seed)?;
    let acceptance = samples.acceptance_rate();
    let prepared = estimator.prepare(samples)?;
    let estimates = estimator.estimate_many(&prepared, &points)?;
    let expected =
        points.par_iter().map(|x| estimator.expected(&density, x, Quadrature::Auto)).collect::<Result<Vec<f64>>>()?;

    let dim = manifold.param_dim();
    let mut data = String::from("point_index");
    for j in 0..dim {
        let _ = write!(data, ",param_{j}");
    }
    data.push_str(",estimate,exact_density,expected_kde\n");
    let mut sup_err: f64 = 0.0;
    for (i, x) in points.iter().enumerate() {
        let exact = density.evaluate(x);
        sup_err = sup_err.max((estimates[i] - exact).abs());
        let _ = write!(data, "{i}");
        for c in x {
            let _ = write!(data, ",{}", num(*c));
        }
        let _ = writeln!(data, ",{},{},{}", num(estimates[i]), num(exact), num(expected[i]));
    }
    let mut outcome = Outcome::new(serde_json::json!({
        "grid_resolution": resolution,
        "grid_points": points.len(),
        "kernel_flavor": estimator.kernel().flavor(),
        "density": density.descriptor(),
    }));
    outcome.seed = Some(a.seed);
    outcome.summary.push(format!("points={} sup_err={} acceptance={}", points.len(), num(sup_err), num(acceptance)));
    outcome.files.push(Emitted { out: a.out.clone(), data, trailer: String::new() });
    Ok(outcome)
}

fn converge(a: &ConvergeArgs) -> Result<Outcome> {
    let text =
        std::fs::read_to_string(&a.plan).map_err(|e| Error::config(format!("plan {}: {e}", a.plan.display())))?;
    let mut plan = ExperimentPlan::from_json(&text)?;
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    let report = analysis::run_experiment(&plan)?;
    for w in &report.warnings {
        eprintln!("kde: warning: {w}");
    }
    let mut data = String::from("n,eps,replicate,sup_err,l1_err,sup_var,sup_bias\n");
    for r in &report.rows {
        let _ = writeln!(
            data,
            "{},{},{},{},{},{},{}",
            r.n,
            num(r.eps),
            r.replicate,
            num(r.sup_err),
            num(r.l1_err),
            num(r.sup_var),
            num(r.sup_bias)
        );
    }
    let mut trailer = String::from("# fits\n");
    for line in serde_json::to_string_pretty(&report.fits).expect("fits serialize").lines() {
        let _ = writeln!(trailer, "# {line}");
    }
    let medians = report.medians(analysis::Channel::SupErr);
    if let Some(prefix) = &a.gnuplot {
        write_gnuplot(prefix, &medians)?;
    }
    let mut outcome = Outcome::new(serde_json::json!({
        "plan": plan,
        "grid_resolution": report.grid_resolution,
        "grid_points": report.grid_points,
    }));
    outcome.seed = Some(plan.seed);
    if let Some(f) = &report.fits.sup_err_vs_n {
        outcome.summary.push(format!("sup_err slope vs n = {}", num(f.slope)));
    }
    outcome.files.push(Emitted { out: a.out.clone(), data, trailer });
    Ok(outcome)
}

fn write_gnuplot(prefix: &Path, medians: &[(usize, f64, f64)]) -> Result<()> {
    let dat = prefix.with_extension("dat");
    let gp = prefix.with_extension("gp");
    let mut d = String::from("# n median_sup_err\n");
    for (n, _, m) in medians {
        let _ = writeln!(d, "{n} {}", num(*m));
    }
    let script = format!(
        "set logscale xy\nset xlabel \"n\"\nset ylabel \"median sup error\"\nplot \"{}\" using 1:2 with linespoints title \"sup error\"\n",
        dat.file_name().and_then(|f| f.to_str()).unwrap_or("data.dat")
    );
    let write = |p: &Path, s: &str| {
        std::fs::write(p, s).map_err(|e| Error::config(format!("cannot write {}: {e}", p.display())))
    };
    write(&dat, &d)?;
    write(&gp, &script)
}

fn partition(a: &PartitionArgs) -> Result<Outcome> {
    if a.d == 0 {
        return Err(Error::config("--d must be at least 1"));
    }
    let chart_domain = EmbeddedManifold::torus(a.d)?;
    let kernel = isotropic_kernel(&a.kernel, &chart_domain, 1.0)?;
    let options = PartitionOptions {
        budget: a.budget,
        search: match a.search {
            SearchArg::Bisection => PartitionSearch::Bisection,
            SearchArg::Exhaustive => PartitionSearch::Exhaustive,
        },
    };
    let r = kernels::partition_number_with(&kernel, a.gamma, a.dlip, a.d, options)?;
    let mut outcome = Outcome::new(serde_json::json!({ "kernel": kernel.label() }));
    outcome.summary.push(format!(
        "N={} cubes_per_axis={} osc_sum={} gamma_sq={}",
        r.cubes,
        r.cubes_per_axis,
        num(r.osc_sum),
        num(a.gamma * a.gamma)
    ));
    if a.out.is_some() {
        let data = format!(
            "gamma,dimension,cubes_per_axis,cubes,cube_side,osc_sum,domain_halfwidth,partitions_tested\n{},{},{},{},{},{},{},{}\n",
            num(r.gamma),
            r.dimension,
            r.cubes_per_axis,
            r.cubes,
            num(r.cube_side),
            num(r.osc_sum),
            num(r.domain_halfwidth),
            r.partitions_tested
        );
        outcome.files.push(Emitted { out: a.out.clone(), data, trailer: String::new() });
    }
    Ok(outcome)
}

fn integrability_cmd(a: &IntegrabilityArgs) -> Result<Outcome> {
    let manifold = EmbeddedManifold::from_descriptor(&a.manifold)?;
    let kernel = isotropic_kernel(&a.kernel, &manifold, a.eps)?;
    let center: [f64; 2] =
        a.center.0.as_slice().try_into().map_err(|_| Error::config("--center needs exactly two coordinates"))?;
    let report = integrability::darboux_report(&manifold, &kernel, a.eps, center, a.first_level, a.levels)?;
    let mut data = String::from("level,m,upper,lower,gap\n");
    for l in &report.levels {
        let _ = writeln!(data, "{},{},{},{},{}", l.level, l.m, num(l.upper), num(l.lower), num(l.gap));
    }
    let gaps = report.gaps();
    let verdict = integrability::integrability_verdict(&gaps, a.threshold);
    let mut outcome = Outcome::new(serde_json::json!({ "kernel": kernel.label(), "manifold": manifold.descriptor() }));
    outcome.summary.push(format!(
        "verdict={verdict:?} final_gap={} limit_gap={}",
        num(*gaps.last().unwrap_or(&f64::NAN)),
        num(report.limit_gap)
    ));
    if let Some(h) = a.critical_h {
        let c = integrability::critical_set(&manifold, center, h)?;
        outcome.summary.push(format!(
            "critical_set verdict={:?} boundary_measure={},{},{}",
            c.verdict,
            num(c.boundary_measure[0]),
            num(c.boundary_measure[1]),
            num(c.boundary_measure[2])
        ));
    }
    outcome.files.push(Emitted { out: a.out.clone(), data, trailer: String::new() });
    Ok(outcome)
}

fn covering_cmd(a: &CoveringArgs) -> Result<Outcome> {
    let probe = CoveringProbe::from_descriptor(&a.kernel)?;
    let rows = covering::non_vc_witness(&probe, &a.deltas.0, a.anchors)?;
    let mut data = String::from("delta,a,lhs,estimate,rhs,pass\n");
    for r in &rows {
        let _ = writeln!(
            data,
            "{},{},{},{},{},{}",
            num(r.delta),
            num(r.a),
            num(r.lhs),
            num(r.estimate),
            num(r.rhs),
            r.pass
        );
    }
    let mut outcome = Outcome::new(serde_json::json!({ "chaos_radius": probe.chaos_radius() }));
    outcome.summary.push(format!(
        "witness: {} of {} pairs above the bound",
        rows.iter().filter(|r| r.pass).count(),
        rows.len()
    ));
    outcome.files.push(Emitted { out: a.out.clone(), data, trailer: String::new() });
    if let Some(radii) = &a.packing {
        if !(a.grid_factor > 0.0) {
            return Err(Error::config("--grid-factor must be positive"));
        }
        let mut data = String::from("eps_metric,candidates,count,coarse_grid\n");
        for &eps in &radii.0 {
            if !(eps > 0.0) {
                return Err(Error::config(format!("packing radius {eps} must be positive")));
            }
            let grid = ((a.grid_factor / eps).ceil() as usize).max(2);
            let p = covering::packing_number(&probe, eps, grid)?;
            let _ = writeln!(data, "{},{},{},{}", num(eps), p.candidates, p.count, p.coarse_grid);
            outcome.summary.push(format!("packing eps={} count={}", num(eps), p.count));
        }
        outcome.files.push(Emitted { out: a.packing_out.clone(), data, trailer: String::new() });
    }
    Ok(outcome)
}

/// Tolerances of the two geometry diagnostics.
const CHORD_TOLERANCE: f64 = 1e-6;
const VOLUME_RELATIVE_TOLERANCE: f64 = 0.05;

fn geomcheck(a: &GeomcheckArgs) -> Result<Outcome> {
    let manifold = EmbeddedManifold::from_descriptor(&a.manifold)?;
    if !(a.h > 0.0 && a.t > 0.0) {
        return Err(Error::config("--t and --h must be positive"));
    }
    let x = manifold.default_anchor();
    let mut direction = vec![0.0; manifold.intrinsic_dim()];
    direction[0] = 1.0;
    let chord = manifold.chord_ratio_check(&x, &direction, a.t)?;

    // Richardson-extrapolated (U(h) − 1)/h² recovers the t² coefficient of the volume density.
    let quotient = |h: f64| -> Result<f64> {
        let v: Vec<f64> = direction.iter().map(|c| c * h).collect();
        Ok((manifold.volume_density_in_normal_coords(&x, &v)? - 1.0) / (h * h))
    };
    let coefficient = (4.0 * quotient(a.h)? - quotient(2.0 * a.h)?) / 3.0;
    let expected = match manifold.kind() {
        ManifoldKind::Sphere { dim } => -(*dim as f64 - 1.0) / 6.0,
        _ => 0.0,
    };
    let volume_tol = VOLUME_RELATIVE_TOLERANCE * expected.abs().max(1e-12);
    let chord_ok = chord < CHORD_TOLERANCE;
    let volume_ok = (coefficient - expected).abs() <= volume_tol;

    let mut data = String::from("check,value,expected,tolerance,pass\n");
    let _ = writeln!(data, "chord_ratio_residual,{},{},{},{chord_ok}", num(chord), num(0.0), num(CHORD_TOLERANCE));
    let _ = writeln!(
        data,
        "volume_quadratic_coefficient,{},{},{},{volume_ok}",
        num(coefficient),
        num(expected),
        num(volume_tol)
    );
    let mut outcome = Outcome::new(serde_json::json!({ "manifold": manifold.descriptor(), "anchor": x }));
    outcome.summary.push(format!("chord_ratio_residual={} pass={chord_ok}", num(chord)));
    outcome.summary.push(format!(
        "volume_quadratic_coefficient={} expected={} pass={volume_ok}",
        num(coefficient),
        num(expected)
    ));
    if !(chord_ok && volume_ok) {
        outcome.failure = Some("geometry diagnostics failed".into());
    }
    outcome.files.push(Emitted { out: a.out.clone(), data, trailer: String::new() });
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_list_parses_and_rejects() {
        assert_eq!("0.01, 0.003".parse::<RealList>().unwrap().0, vec![0.01, 0.003]);
        assert!("0.1,x".parse::<RealList>().is_err());
    }

    #[test]
    fn manifest_round_trips_through_header() {
        let m = RunManifest {
            subcommand: "eval".into(),
            config: serde_json::json!({ "eps": 0.05, "manifold": "circle" }),
            resolved: Value::Null,
            seed: Some(3),
            version: "0".into(),
            workers: 1,
            duration_seconds: 0.5,
            outputs: vec![],
        };
        let text = format!("{}a,b\n1,2\n", m.header());
        let back = RunManifest::from_header(&text).unwrap();
        assert_eq!(back.config, m.config);
        assert_eq!(data_section(&text), "a,b\n1,2\n");
    }

    #[test]
    fn numbers_carry_seventeen_digits() {
        let s = num(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn config_flags_are_overridden_by_the_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"kernel": "cantor", "deltas": [0.05, 0.02], "anchors": 4}"#).unwrap();
        let argv: Vec<OsString> = ["kde", "--config", cfg.to_str().unwrap(), "covering", "--anchors", "3"]
            .iter()
            .map(OsString::from)
            .collect();
        let cli = Cli::try_parse_from(expand_config(argv).unwrap()).unwrap();
        let Command::Covering(a) = cli.command else { panic!() };
        assert_eq!(a.kernel, "cantor");
        assert_eq!(a.deltas.0, vec![0.05, 0.02]);
        assert_eq!(a.anchors, 3);
    }
}
