//! Command-line front end: flag and config-file parsing, dispatch to the
//! library, and JSON/CSV report persistence.
//!
//! Every report file has the shape `{"report": ..., "metadata": ...}`. The
//! `report` part is a deterministic function of the resolved inputs; wall
//! times live only in `metadata`.
//!
//! Exit status: 0 when every asserted check passes, 2 when one fails (or a
//! search finds nothing feasible), 1 on usage, config, input or I/O errors.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::comparison::{solve_h, supersolution_defect, verify_graph_comparison, HSource, HSpec};
use crate::counterexample::{certify, search_bc, KwSpec, CERTIFICATE_SCHEMA, DEFAULT_N, DEFAULT_R_MAX};
use crate::error::{Error, Result};
use crate::gradient_bound::{
    canonical_params, corollary_bound, derived_constants, korevaar_bound, optimize_params, validate_params,
    verify_solution_bound, BoundInputs, KorevaarParams, KwHypotheses, OptimizeOptions, VerifyTarget,
};
use crate::heat::{
    appendix_constants, ball_average_limit, build_graph_operator, fit_gaussian_constants, gaussian_sandwich_check,
    kernel_samples, mass_conservation_check, supersolution_flow, weighted_laplacian_average, EllipticCoefficient,
    EvolveOptions, KernelSample,
};
use crate::model_manifold::{ManifoldKind, ManifoldSpec, ModelManifold};
use crate::mse::{jacobi_residual, mse_residual, radial_flux_solution, uniform_grid, RadialGraph, TGraph};
use crate::suite::{self, SuiteOptions};
use crate::tolerances::Tolerances;
use crate::verdict::Verdict;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "MGLAB_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "mglab-out";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mglab", version, about = "Numerical laboratory for minimal graphs over model manifolds")]
pub struct Cli {
    /// JSON run config; explicit flags win over its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report path (JSON); CSV series are written beside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial minimal graph with prescribed flux.
    SolveRadial(SolveRadialArgs),
    /// Explicit gradient estimate.
    GradientBound {
        #[command(subcommand)]
        command: GradientCommand,
    },
    /// Radial diffusion checks.
    Heat {
        #[command(subcommand)]
        command: HeatCommand,
    },
    /// Comparison ODE profile and graph comparison.
    CompareOde(CompareOdeArgs),
    /// Certificate for the doubly-warped example.
    CertifyCounterexample(CertifyArgs),
    /// Search of the free constants of the doubly-warped example.
    SearchBc(SearchArgs),
    /// The acceptance battery.
    Suite(SuiteArgs),
}

#[derive(Debug, Args)]
pub struct SolveRadialArgs {
    #[arg(long)]
    pub manifold: Option<PathBuf>,
    #[arg(long)]
    pub flux: Option<f64>,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long = "kappa-bar")]
    pub kappa_bar: Option<f64>,
    #[arg(long = "R")]
    pub r_outer: Option<f64>,
    #[arg(long = "R1")]
    pub r_inner: Option<f64>,
    #[arg(long = "gamma-star")]
    pub gamma_star: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum GradientCommand {
    /// Bound for explicit parameters.
    Eval {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        a0: Option<f64>,
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// The δ-parameter choice and its closed-form estimate.
    Canonical {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        kbar0: Option<f64>,
    },
    /// Feasible parameters minimizing the bound at one point.
    Optimize {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Checks the bound on a radial graph CSV or on the t-graph of a
    /// doubly-warped certificate.
    Verify {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        manifold: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long)]
        center: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Slope `a` of the t-graph `u = a t + b`.
        #[arg(long = "slope")]
        slope: Option<f64>,
        #[arg(long = "offset")]
        offset: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct HeatGrid {
    #[arg(long)]
    pub manifold: Option<PathBuf>,
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum HeatCommand {
    /// Heat kernel from a concentrated bump: mass, Gaussian sandwich.
    Kernel {
        #[command(flatten)]
        grid: HeatGrid,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Supersolution flow and ball averages of a shipped profile.
    Meanvalue {
        #[command(flatten)]
        grid: HeatGrid,
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// `R²/|B_R| ∫ Lf` for a shipped supersolution.
    LapAverage {
        #[command(flatten)]
        grid: HeatGrid,
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Constants of the Gaussian lower-bound iteration.
    AppendixConstants {
        #[arg(long)]
        c3p: Option<f64>,
        #[arg(long)]
        c4p: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "c-harnack")]
        c_harnack: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct CompareOdeArgs {
    /// `zero`, `const-kappa` or `decay-kappa`.
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long = "kappa-bar")]
    pub kappa_bar: Option<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub manifold: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Evaluate the grid on one thread (same result).
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Subset of criteria ids.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Expected command path, e.g. `"gradient-bound canonical"`.
    #[serde(default)]
    pub command: Option<String>,
    /// Manifold spec path.
    #[serde(default)]
    pub manifold: Option<PathBuf>,
    /// Numeric and list parameters keyed by flag name.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Seed of randomized steps; 0 when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Grid sizes keyed by flag name (`n`, `samples`, `grid`, ...).
    #[serde(default)]
    pub grid: BTreeMap<String, usize>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Resolves each parameter from flag, then config, then default, and
/// records the resolved value as a report input.
struct Resolver {
    cfg: RunConfig,
    used: RefCell<BTreeSet<String>>,
    inputs: RefCell<Map<String, Value>>,
}

impl Resolver {
    fn new(cfg: RunConfig) -> Self {
        Self { cfg, used: RefCell::new(BTreeSet::new()), inputs: RefCell::new(Map::new()) }
    }

    fn config_value(&self, key: &str) -> Option<Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.cfg.params.get(key).cloned().or_else(|| self.cfg.grid.get(key).map(|&v| json!(v)))
    }

    fn put(&self, key: &str, v: Value) {
        self.inputs.borrow_mut().insert(key.to_string(), v);
    }

    fn num(&self, key: &str, flag: Option<f64>, default: Option<f64>) -> Result<f64> {
        let from_cfg = match self.config_value(key) {
            Some(v) => Some(v.as_f64().ok_or_else(|| Error::Config(format!("params.{key} must be a number")))?),
            None => None,
        };
        let v = flag.or(from_cfg).or(default).ok_or_else(|| Error::Config(format!("missing --{key}")))?;
        self.put(key, json!(v));
        Ok(v)
    }

    fn int(&self, key: &str, flag: Option<usize>, default: Option<usize>) -> Result<usize> {
        let from_cfg = match self.config_value(key) {
            Some(v) => Some(
                v.as_u64().map(|x| x as usize).ok_or_else(|| Error::Config(format!("{key} must be a non-negative integer")))?,
            ),
            None => None,
        };
        let v = flag.or(from_cfg).or(default).ok_or_else(|| Error::Config(format!("missing --{key}")))?;
        self.put(key, json!(v));
        Ok(v)
    }

    fn list(&self, key: &str, flag: Vec<f64>, default: &[f64]) -> Result<Vec<f64>> {
        let from_cfg = match self.config_value(key) {
            Some(Value::Array(a)) => Some(
                a.iter()
                    .map(|x| x.as_f64().ok_or_else(|| Error::Config(format!("params.{key} must hold numbers"))))
                    .collect::<Result<Vec<f64>>>()?,
            ),
            Some(_) => return Err(Error::Config(format!("params.{key} must be a list of numbers"))),
            None => None,
        };
        let v = if !flag.is_empty() { flag } else { from_cfg.unwrap_or_else(|| default.to_vec()) };
        self.put(key, json!(v));
        Ok(v)
    }

    fn text(&self, key: &str, flag: Option<String>, default: Option<&str>) -> Result<String> {
        let from_cfg = match self.config_value(key) {
            Some(v) => Some(v.as_str().map(str::to_string).ok_or_else(|| Error::Config(format!("params.{key} must be a string")))?),
            None => None,
        };
        let v = flag
            .or(from_cfg)
            .or(default.map(str::to_string))
            .ok_or_else(|| Error::Config(format!("missing --{key}")))?;
        self.put(key, json!(v));
        Ok(v)
    }

    fn seed(&self, flag: Option<u64>) -> u64 {
        let s = flag.or(self.cfg.seed).unwrap_or(0);
        self.put("seed", json!(s));
        s
    }

    fn manifold_path(&self, flag: Option<PathBuf>) -> Option<PathBuf> {
        let p = flag.or_else(|| self.cfg.manifold.clone());
        if let Some(p) = &p {
            self.put("manifold", json!(p.display().to_string()));
        }
        p
    }

    fn path(&self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        let from_cfg = match self.config_value(key) {
            Some(v) => Some(PathBuf::from(
                v.as_str().ok_or_else(|| Error::Config(format!("params.{key} must be a path string")))?,
            )),
            None => None,
        };
        let p = flag.or(from_cfg);
        if let Some(p) = &p {
            self.put(key, json!(p.display().to_string()));
        }
        Ok(p)
    }

    fn tolerances(&self) -> Tolerances {
        self.cfg.tolerances.unwrap_or_default()
    }

    fn finish(&self) -> Result<Value> {
        let used = self.used.borrow();
        let unknown: Vec<&String> =
            self.cfg.params.keys().chain(self.cfg.grid.keys()).filter(|k| !used.contains(*k)).collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("config entries not used by this command: {unknown:?}")));
        }
        Ok(Value::Object(self.inputs.borrow().clone()))
    }
}

/// Result of one command before persistence.
struct Outcome {
    anchor: &'static str,
    outputs: Value,
    passed: bool,
    /// Named CSV series written beside the report: header and rows.
    series: Vec<(&'static str, Vec<&'static str>, Vec<Vec<f64>>)>,
    metadata: Map<String, Value>,
}

impl Outcome {
    fn new(anchor: &'static str, outputs: Value, passed: bool) -> Self {
        Self { anchor, outputs, passed, series: Vec::new(), metadata: Map::new() }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn require_file(path: &Path) -> Result<()> {
    match path.is_file() {
        true => Ok(()),
        false => Err(Error::Config(format!("{}: no such file", path.display()))),
    }
}

fn load_manifold(path: &Path) -> Result<ModelManifold> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ManifoldSpec::from_json(&text)
        .map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?
        .build()
}

fn manifold_or_euclidean(res: &Resolver, flag: Option<PathBuf>) -> Result<ModelManifold> {
    match res.manifold_path(flag) {
        Some(p) => load_manifold(&p),
        None => {
            res.put("manifold", json!("euclidean m=3"));
            ModelManifold::euclidean(3)
        }
    }
}

fn bound_inputs(res: &Resolver, a: &InputArgs, defaults: (Option<f64>, Option<f64>)) -> Result<BoundInputs> {
    let r_outer = res.num("R", a.r_outer, None)?;
    Ok(BoundInputs {
        m: res.int("m", a.m, None)?,
        kappa: res.num("kappa", a.kappa, Some(0.0))?,
        kappa_bar: res.num("kappa-bar", a.kappa_bar, defaults.1.or(Some(0.0)))?,
        r_outer,
        r_inner: res.num("R1", a.r_inner, defaults.0.map(|f| f * r_outer))?,
        gamma_star: res.num("gamma-star", a.gamma_star, Some(1.0))?,
    })
}

/// Parses `argv` and runs the command; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_ERROR,
            };
        }
    };
    match execute(cli) {
        Ok(passed) => {
            if passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(Error::Infeasible(msg)) => {
            eprintln!("mglab: infeasible: {msg}");
            EXIT_FAIL
        }
        Err(e) => {
            eprintln!("mglab: {e}");
            EXIT_ERROR
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::SolveRadial(_) => "solve-radial",
        Command::GradientBound { command } => match command {
            GradientCommand::Eval { .. } => "gradient-bound eval",
            GradientCommand::Canonical { .. } => "gradient-bound canonical",
            GradientCommand::Optimize { .. } => "gradient-bound optimize",
            GradientCommand::Verify { .. } => "gradient-bound verify",
        },
        Command::Heat { command } => match command {
            HeatCommand::Kernel { .. } => "heat kernel",
            HeatCommand::Meanvalue { .. } => "heat meanvalue",
            HeatCommand::LapAverage { .. } => "heat lap-average",
            HeatCommand::AppendixConstants { .. } => "heat appendix-constants",
        },
        Command::CompareOde(_) => "compare-ode",
        Command::CertifyCounterexample(_) => "certify-counterexample",
        Command::SearchBc(_) => "search-bc",
        Command::Suite(_) => "suite",
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let name = command_name(&cli.command);
    if let Some(expected) = &cfg.command {
        if expected != name {
            return Err(Error::Config(format!("config is for `{expected}`, not `{name}`")));
        }
    }
    let out = report_path(cli.out.clone().or_else(|| cfg.out.clone()), name);
    let res = Resolver::new(cfg);
    let start = Instant::now();
    let outcome = dispatch(cli.command, &res)?;
    let inputs = res.finish()?;
    let wall = start.elapsed().as_secs_f64();
    persist(&out, name, inputs, outcome, wall)
}

fn report_path(out: Option<PathBuf>, name: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        dir.join(format!("{}.json", name.replace(' ', "-")))
    })
}

fn persist(out: &Path, name: &str, inputs: Value, o: Outcome, wall: f64) -> Result<bool> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut files = Vec::new();
    for (label, header, rows) in &o.series {
        let stem = out.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_else(|| "report".into());
        let path = out.with_file_name(format!("{stem}.{label}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        files.push(path.display().to_string());
    }
    let mut metadata = o.metadata;
    metadata.insert("wall_time_seconds".into(), json!(wall));
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    metadata.insert("finished_unix_seconds".into(), json!(now));
    metadata.insert("series_files".into(), json!(files));
    let doc = json!({
        "report": {
            "command": name,
            "anchor": o.anchor,
            "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
            "inputs": inputs,
            "outputs": o.outputs,
            "passed": o.passed,
        },
        "metadata": metadata,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    std::fs::write(out, format!("{text}\n"))?;
    // a closed stdout pipe is not an error; the report file is authoritative
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    eprintln!("mglab: {name}: {} -> {}", if o.passed { "pass" } else { "FAIL" }, out.display());
    Ok(o.passed)
}

fn dispatch(cmd: Command, res: &Resolver) -> Result<Outcome> {
    match cmd {
        Command::SolveRadial(a) => solve_radial(a, res),
        Command::GradientBound { command } => gradient(command, res),
        Command::Heat { command } => heat(command, res),
        Command::CompareOde(a) => compare_ode(a, res),
        Command::CertifyCounterexample(a) => certify_cmd(a, res),
        Command::SearchBc(a) => search_cmd(a, res),
        Command::Suite(a) => suite_cmd(a, res),
    }
}

fn solve_radial(a: SolveRadialArgs, res: &Resolver) -> Result<Outcome> {
    let path = res.manifold_path(a.manifold).ok_or_else(|| Error::Config("missing --manifold".into()))?;
    let man = load_manifold(&path)?;
    let flux = res.num("flux", a.flux, None)?;
    let r0 = res.num("r0", a.r0, None)?;
    let r1 = res.num("r1", a.r1, None)?;
    let n = res.int("n", a.n, Some(1025))?;
    let tol = res.tolerances();
    let g = radial_flux_solution(&man, flux, r0, r1, n)?;
    let flux_prof = g.flux_profile();
    let scale = flux.abs().max(f64::MIN_POSITIVE);
    let drift = flux_prof.iter().map(|v| (v - flux).abs()).fold(0.0, f64::max) / scale;
    let jac = jacobi_residual(&g);
    let passed = drift < tol.flux_drift || flux == 0.0;
    let outputs = json!({
        "points": g.len(),
        "u_end": g.u.last(),
        "w_max": g.w.iter().cloned().fold(1.0, f64::max),
        "mse_residual": mse_residual(&g),
        "jacobi_residual": jac.max,
        "jacobi_warning": jac.warning,
        "flux_drift": drift,
        "flux_drift_tolerance": tol.flux_drift,
    });
    let mut o = Outcome::new("radial minimal graphs with constant flux", outputs, passed);
    let residual = crate::mse::mse_residual_profile(&g);
    let rows = (0..g.len())
        .map(|i| {
            let rv = if i == 0 || i + 1 == g.len() { f64::NAN } else { residual[i - 1] };
            vec![g.r[i], g.u[i], g.du[i], g.w[i], rv]
        })
        .collect();
    o.series.push(("graph", vec!["r", "u", "du", "W", "residual"], rows));
    Ok(o)
}

fn params_from(res: &Resolver, epsilon: Option<f64>, tau: Option<f64>, q: Option<f64>, a0: Option<f64>, l: Option<f64>) -> Result<KorevaarParams> {
    Ok(KorevaarParams {
        epsilon: res.num("epsilon", epsilon, None)?,
        tau: res.num("tau", tau, None)?,
        q: res.num("q", q, None)?,
        a0: res.num("a0", a0, None)?,
        l: res.num("L", l, None)?,
    })
}

const GRADIENT_ANCHOR: &str = "explicit Korevaar gradient estimate";

fn gradient(cmd: GradientCommand, res: &Resolver) -> Result<Outcome> {
    match cmd {
        GradientCommand::Eval { inputs, epsilon, tau, q, a0, l, r, gamma } => {
            let inp = bound_inputs(res, &inputs, (None, None))?;
            inp.check()?;
            let p = params_from(res, epsilon, tau, q, a0, l)?;
            let r = res.num("r", r, Some(0.0))?;
            let gamma = res.num("gamma", gamma, Some(0.0))?;
            let v = validate_params(&inp, &p);
            let bound = if v.passed { Some(korevaar_bound(&inp, &p, r, gamma)?) } else { None };
            let outputs = json!({ "params": p, "validity": v, "bound": bound });
            Ok(Outcome::new(GRADIENT_ANCHOR, outputs, v.passed))
        }
        GradientCommand::Canonical { inputs, delta, kbar0 } => {
            let delta = res.num("delta", delta, None)?;
            let kb0 = res.num("kbar0", kbar0, Some(1.0))?;
            let inp = bound_inputs(res, &inputs, (Some(0.5), Some(kb0)))?;
            inp.check()?;
            let p = canonical_params(delta, inp.gamma_star, inp.m, kb0, inp.r_outer)?;
            let v = validate_params(&inp, &p);
            let c = derived_constants(&inp, &p);
            let cb = corollary_bound(delta, inp.gamma_star, inp.m, kb0)?;
            let outputs = json!({
                "params": p,
                "constants": c,
                "validity": v,
                "corollary": cb,
            });
            Ok(Outcome::new("canonical parameters of the gradient estimate", outputs, v.passed))
        }
        GradientCommand::Optimize { inputs, r, gamma, seed, budget, restarts } => {
            let inp = bound_inputs(res, &inputs, (None, None))?;
            let r = res.num("r", r, Some(0.0))?;
            let gamma = res.num("gamma", gamma, Some(0.0))?;
            let d = OptimizeOptions::default();
            let opts = OptimizeOptions {
                seed: res.seed(seed),
                budget: res.int("budget", budget, Some(d.budget))?,
                restarts: res.int("restarts", restarts, Some(d.restarts))?,
            };
            let rep = optimize_params(&inp, r, gamma, &opts)?;
            let beats = rep.canonical.map_or(true, |(_, c)| rep.bound.log_value <= c.log_value);
            let passed = rep.validity.passed && beats;
            Ok(Outcome::new(GRADIENT_ANCHOR, json!({ "optimized": rep, "at_most_canonical": beats }), passed))
        }
        GradientCommand::Verify { inputs, manifold, graph, certificate, center, samples, slope, offset } => {
            let samples = res.int("samples", samples, Some(40))?;
            if let Some(cert_path) = res.path("certificate", certificate)? {
                let (spec, hyp) = read_certificate(&cert_path)?;
                let man = crate::counterexample::build_kw_manifold(&spec)?;
                let tg = TGraph::new(&man, res.num("slope", slope, Some(1.0))?, res.num("offset", offset, Some(0.0))?)?;
                let inp = bound_inputs(res, &inputs, (None, Some(hyp.kappa_bar)))?;
                let rep = verify_solution_bound(VerifyTarget::KwTGraph { graph: &tg, hypotheses: &hyp, samples }, &inp, None)?;
                let passed = rep.passed;
                return Ok(Outcome::new(GRADIENT_ANCHOR, json!({ "target": "kw-t-graph", "hypotheses": hyp, "verify": rep }), passed));
            }
            let man_path = res.manifold_path(manifold).ok_or_else(|| Error::Config("missing --manifold".into()))?;
            let man = load_manifold(&man_path)?;
            if man.kind() != ManifoldKind::RotationallySymmetric {
                return Err(Error::Config("doubly-warped models are verified through --certificate".into()));
            }
            let graph_path = res.path("graph", graph)?.ok_or_else(|| Error::Config("missing --graph".into()))?;
            require_file(&graph_path)?;
            let g = RadialGraph::read_csv(&man, &graph_path)?;
            let center = res.num("center", center, Some(0.0))?;
            let inp = bound_inputs(res, &inputs, (None, None))?;
            let rep = verify_solution_bound(VerifyTarget::RadialBall { graph: &g, center, samples }, &inp, None)?;
            let passed = rep.passed;
            Ok(Outcome::new(GRADIENT_ANCHOR, json!({ "target": "radial-ball", "verify": rep }), passed))
        }
    }
}

/// Reads a certificate either bare or wrapped in a `certify-counterexample`
/// report.
fn read_certificate(path: &Path) -> Result<(KwSpec, KwHypotheses)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cert = doc.pointer("/report/outputs/certificate").unwrap_or(&doc);
    let bad = |what: &str| Error::Config(format!("{}: certificate lacks {what}", path.display()));
    if cert.get("schema").and_then(Value::as_str) != Some(CERTIFICATE_SCHEMA) {
        return Err(bad(&format!("schema {CERTIFICATE_SCHEMA}")));
    }
    let spec: KwSpec = serde_json::from_value(cert.get("spec").cloned().ok_or_else(|| bad("spec"))?)
        .map_err(|e| Error::Config(format!("{}: spec: {e}", path.display())))?;
    let ricci_positive = cert
        .get("claims")
        .and_then(Value::as_array)
        .and_then(|cs| cs.iter().find(|c| c.get("name").and_then(Value::as_str) == Some("ricci-positive")))
        .and_then(|c| c.get("verdict"))
        .and_then(Value::as_str)
        == Some("pass");
    let kappa_bar = cert.pointer("/decay/kappa_bar").and_then(Value::as_f64).ok_or_else(|| bad("decay.kappa_bar"))?;
    let f_max = cert.pointer("/warps/f_origin").and_then(Value::as_f64).ok_or_else(|| bad("warps.f_origin"))?;
    let hyp = KwHypotheses { ricci_positive, kappa_bar, f_max, f_min: spec.c, source: path.display().to_string() };
    Ok((spec, hyp))
}

/// A shipped radial profile: nodal values, the operator it lives under,
/// its pointwise formula where one exists, and its infimum.
struct Profile {
    values: Vec<f64>,
    op: EllipticCoefficient,
    formula: Option<fn(f64) -> f64>,
    inf: f64,
}

fn ball_potential(r: f64) -> f64 {
    if r < 1.0 {
        (3.0 - r * r) / 2.0
    } else {
        1.0 / r
    }
}

fn build_profile(name: &str, man: &ModelManifold, r_max: f64, n: usize) -> Result<Profile> {
    let grid = || uniform_grid(0.0, r_max, n);
    let with = |formula: fn(f64) -> f64, inf: f64| -> Result<Profile> {
        let op = EllipticCoefficient::identity(man, grid())?;
        Ok(Profile { values: op.r.iter().map(|&r| formula(r)).collect(), op, formula: Some(formula), inf })
    };
    match name {
        "constant" => with(|_| 2.0, 2.0),
        "two-plus-inverse" => with(|r| 2.0 + 1.0 / (1.0 + r), 2.0),
        "inverse-hypot" => with(|r| 1.0 / r.hypot(1.0), 0.0),
        "ball-potential" => with(ball_potential, 0.0),
        "catenoid-inverse-slope" => {
            let g = radial_flux_solution(man, 1.0, 1.05, r_max, n)?;
            let op = build_graph_operator(&g)?;
            let values = g.w.iter().map(|w| 1.0 / w).collect();
            Ok(Profile { values, op, formula: None, inf: 0.0 })
        }
        other => Err(Error::Config(format!(
            "unknown profile {other}; expected constant, two-plus-inverse, inverse-hypot, ball-potential or catenoid-inverse-slope"
        ))),
    }
}

fn heat(cmd: HeatCommand, res: &Resolver) -> Result<Outcome> {
    let tol = res.tolerances();
    match cmd {
        HeatCommand::Kernel { grid, times, radii } => {
            let man = manifold_or_euclidean(res, grid.manifold)?;
            let r_max = res.num("r-max", grid.r_max, Some(12.0))?;
            let n = res.int("n", grid.n, Some(2048))?;
            let times = res.list("times", times, &[0.5, 1.0, 2.0])?;
            let radii = res.list("radii", radii, &[0.0, 0.5, 1.0, 2.0, 3.0])?;
            let op = EllipticCoefficient::identity(&man, uniform_grid(0.0, r_max, n))?;
            let (samples, evo) = kernel_samples(&op, &man, &times, &radii, &EvolveOptions::for_kernel(&op))?;
            let mass = mass_conservation_check(&evo.trace, tol.mass_drift)?;
            let fit = fit_gaussian_constants(&samples)?;
            let sandwich = gaussian_sandwich_check(&samples, &fit)?;
            let euclid = euclidean_kernel_error(&man, &samples);
            let passed = mass.verdict != Verdict::Fail && sandwich.passed;
            let outputs = json!({
                "mass": mass,
                "steps": evo.steps,
                "min_value": evo.min_value,
                "inconclusive": evo.inconclusive,
                "samples": samples,
                "fitted_constants": fit,
                "sandwich": { "violations": sandwich.violations, "derivative_violations": sandwich.derivative_violations,
                              "consistent": sandwich.consistent, "passed": sandwich.passed },
                "euclidean_relative_error": euclid,
            });
            let mut o = Outcome::new("Gaussian heat kernel bounds", outputs, passed);
            let rows = evo.trace.iter().map(|s| vec![s.t, s.mass, s.outer_fraction]).collect();
            o.series.push(("mass", vec!["t", "mass", "outer_fraction"], rows));
            Ok(o)
        }
        HeatCommand::Meanvalue { grid, profile, horizon, radii } => {
            let man = manifold_or_euclidean(res, grid.manifold)?;
            let name = res.text("profile", profile, Some("inverse-hypot"))?;
            let r_max = res.num("r-max", grid.r_max, Some(8.0))?;
            let n = res.int("n", grid.n, Some(400))?;
            let horizon = res.num("horizon", horizon, Some(0.5))?;
            let default_radii: Vec<f64> = (1..=10).map(|k| 10.0 * k as f64).collect();
            let radii = res.list("radii", radii, &default_radii)?;
            let p = build_profile(&name, &man, r_max, n)?;
            let flow = supersolution_flow(&p.values, &p.op, horizon)?;
            let flow_ok = flow.passed && flow.max_dt_u <= tol.monotone;
            let ball = match p.formula {
                Some(f) => Some(ball_average_limit(f, &man, &radii, Some(p.inf), tol.ball_average)?),
                None => None,
            };
            // a relative gap is only meaningful for a positive infimum
            let ball_ok = ball.as_ref().map_or(true, |b| p.inf <= 0.0 || b.passed);
            let mut o = Outcome::new(
                "mean value property of supersolutions",
                json!({ "flow": flow, "ball_average": ball, "ball_average_asserted": p.inf > 0.0 }),
                flow_ok && ball_ok,
            );
            if let Some(b) = &ball {
                let rows = b.radii.iter().zip(&b.averages).map(|(r, a)| vec![*r, *a]).collect();
                o.series.push(("ball-average", vec!["R", "average"], rows));
            }
            Ok(o)
        }
        HeatCommand::LapAverage { grid, profile, radii } => {
            let man = manifold_or_euclidean(res, grid.manifold)?;
            let name = res.text("profile", profile, Some("inverse-hypot"))?;
            let r_max = res.num("r-max", grid.r_max, Some(120.0))?;
            let n = res.int("n", grid.n, Some(4001))?;
            let radii = res.list("radii", radii, &[1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0])?;
            let p = build_profile(&name, &man, r_max, n)?;
            let rep = weighted_laplacian_average(&p.values, &p.op, &radii)?;
            let passed = rep.all_nonpositive && rep.ratio < tol.lap_average_ratio;
            let rows = rep.radii.iter().zip(&rep.values).map(|(r, v)| vec![*r, *v]).collect();
            let mut o = Outcome::new("weighted Laplacian averages of supersolutions", to_value(&rep), passed);
            o.series.push(("lap-average", vec!["R", "value"], rows));
            Ok(o)
        }
        HeatCommand::AppendixConstants { c3p, c4p, m, c_harnack } => {
            let c3p = res.num("c3p", c3p, None)?;
            let c4p = res.num("c4p", c4p, None)?;
            let m = res.int("m", m, None)?;
            let ch = res.num("c-harnack", c_harnack, Some(1.0))?;
            let a = appendix_constants(c3p, c4p, m, ch)?;
            let passed = a.in_band && a.c1_prime > 0.0 && a.c1_prime < 1.0 - a.gamma;
            Ok(Outcome::new("constants of the Gaussian lower-bound iteration", to_value(&a), passed))
        }
    }
}

fn euclidean_kernel_error(man: &ModelManifold, samples: &[KernelSample]) -> Option<f64> {
    if !matches!(man.eta(), crate::model_manifold::Warp::Euclidean) || man.kind() != ManifoldKind::RotationallySymmetric {
        return None;
    }
    let m = man.dim() as f64;
    let err = samples
        .iter()
        .map(|s| {
            let g = (4.0 * std::f64::consts::PI * s.t).powf(-m / 2.0) * (-s.d * s.d / (4.0 * s.t)).exp();
            ((s.h - g) / g).abs()
        })
        .fold(0.0, f64::max);
    Some(err)
}

fn compare_ode(a: CompareOdeArgs, res: &Resolver) -> Result<Outcome> {
    let tol = res.tolerances();
    let kind = res.text("h", a.h, Some("const-kappa"))?;
    let spec = match kind.as_str() {
        "zero" => HSpec::Zero,
        "const-kappa" => HSpec::ConstKappa { kappa_bar: res.num("kappa-bar", a.kappa_bar, Some(1.0))? },
        "decay-kappa" => HSpec::DecayKappa { kappa_bar: res.num("kappa-bar", a.kappa_bar, Some(1.0))? },
        other => return Err(Error::Config(format!("unknown H {other}; expected zero, const-kappa or decay-kappa"))),
    };
    let t_max = res.num("t-max", a.t_max, Some(5.0))?;
    let n = res.int("n", a.n, Some(4096))?;
    let p = solve_h(spec, t_max, n)?;
    let closed: Option<fn(f64, f64) -> f64> = match spec {
        HSpec::Zero => Some(|t, _| t),
        HSpec::ConstKappa { .. } => Some(|t, k| if k == 0.0 { t } else { (k * t).sinh() / k }),
        HSpec::DecayKappa { .. } => None,
    };
    let kb = match spec {
        HSpec::Zero => 0.0,
        HSpec::ConstKappa { kappa_bar } | HSpec::DecayKappa { kappa_bar } => kappa_bar,
    };
    let closed_err = closed.map(|f| {
        p.t.iter().zip(&p.h).skip(1).map(|(&t, &h)| ((h - f(t, kb)) / f(t, kb)).abs()).fold(0.0, f64::max)
    });
    let mut passed = true;
    let mut outputs = json!({ "source": p.source.label(), "residual": p.residual, "closed_form_relative_error": closed_err });
    if let HSpec::DecayKappa { kappa_bar } = spec {
        let kp = (1.0 + (1.0 + 4.0 * kappa_bar * kappa_bar).sqrt()) / 2.0;
        let src: HSource = spec.into();
        let grid = uniform_grid(1e-3, t_max, n);
        let d = supersolution_defect(&src, &grid, |s| (s.powf(kp), kp * (kp - 1.0) * s.powf(kp - 2.0)));
        passed &= d >= tol.supersolution_defect;
        outputs["power_supersolution"] = json!({ "exponent": kp, "min_defect": d, "tolerance": tol.supersolution_defect });
    }
    if let Some(gp) = res.path("graph", a.graph)? {
        let mp = res.manifold_path(a.manifold).ok_or_else(|| Error::Config("--graph needs --manifold".into()))?;
        let man = load_manifold(&mp)?;
        require_file(&gp)?;
        let g = RadialGraph::read_csv(&man, &gp)?;
        let rep = verify_graph_comparison(&g, &p)?;
        passed &= rep.passed;
        outputs["graph_comparison"] = to_value(&rep);
    }
    let mut o = Outcome::new("Laplacian comparison for the distance along minimal graphs", outputs, passed);
    let rows = (0..p.t.len()).map(|i| vec![p.t[i], p.h[i], p.dh[i]]).collect();
    o.series.push(("profile", vec!["t", "h", "dh"], rows));
    Ok(o)
}

const KW_ANCHOR: &str = "doubly-warped example carrying a bounded-gradient minimal graph";

fn certify_cmd(a: CertifyArgs, res: &Resolver) -> Result<Outcome> {
    let spec = KwSpec::new(
        res.int("m", a.m, Some(suite::KW_M))?,
        res.num("alpha", a.alpha, Some(suite::KW_ALPHA))?,
        res.num("beta", a.beta, Some(suite::KW_BETA))?,
        res.num("b", a.b, None)?,
        res.num("c", a.c, None)?,
    )?;
    let r_max = res.num("r-max", a.r_max, Some(DEFAULT_R_MAX))?;
    let n = res.int("n", a.n, Some(DEFAULT_N))?;
    let cert = certify(&spec, r_max, n, !a.sequential)?;
    let passed = cert.passed;
    Ok(Outcome::new(KW_ANCHOR, json!({ "certificate": cert }), passed))
}

fn search_cmd(a: SearchArgs, res: &Resolver) -> Result<Outcome> {
    let rep = search_bc(
        res.int("m", a.m, Some(suite::KW_M))?,
        res.num("alpha", a.alpha, Some(suite::KW_ALPHA))?,
        res.num("beta", a.beta, Some(suite::KW_BETA))?,
        res.int("grid", a.grid, Some(suite::KW_SEARCH_GRID))?,
        res.num("r-max", a.r_max, Some(DEFAULT_R_MAX))?,
        res.int("n", a.n, Some(DEFAULT_N))?,
    )?;
    let passed = rep.certificate.passed;
    Ok(Outcome::new(KW_ANCHOR, to_value(&rep), passed))
}

fn suite_cmd(a: SuiteArgs, res: &Resolver) -> Result<Outcome> {
    let workers = res.int("workers", a.workers, Some(4))?;
    let quick = a.quick;
    res.put("quick", json!(quick));
    let ids = if a.only.is_empty() { suite::CRITERIA.to_vec() } else { a.only };
    res.put("criteria", json!(ids));
    let opts = SuiteOptions { quick, workers, tolerances: res.tolerances() };
    // the worker count changes scheduling only, never the report
    res.inputs.borrow_mut().remove("workers");
    let run = suite::run_suite(&ids, &opts)?;
    let passed = run.report.passed;
    let mut o = Outcome::new("acceptance battery", to_value(&run.report), passed);
    o.metadata.insert("workers".into(), json!(workers));
    o.metadata.insert("timings".into(), to_value(&run.timings));
    o.metadata.insert("suite_seconds".into(), json!(run.total_seconds));
    Ok(o)
}
