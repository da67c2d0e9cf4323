//! The `manopt` command line: argument parsing, exit codes and batch
//! orchestration over problem manifests.

mod check;
mod neighborhood;
mod profile;
mod solve;
mod spectrum;

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use crate::analysis::{Orientation, RatioBaseline};
use crate::error::Error;
use crate::io::{Problem, ProblemManifest};
use crate::manifolds::{s_orthonormalize, Manifold, ManifoldPoint};
use crate::solvers::{HessianMode, Method, SolverConfig, SolverTrace};

pub use check::{check_problem, CheckRow};
pub use neighborhood::skip_message;
pub use profile::build_profile;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Ingestion = 2,
    Numerical = 3,
}

impl ExitCode {
    pub fn of(err: &Error) -> Self {
        match err {
            Error::Parse { .. } | Error::Ingestion(_) | Error::Io(_) => ExitCode::Ingestion,
            Error::Dimension(_) | Error::Contract(_) | Error::Numerical(_) | Error::Precondition(_) => {
                ExitCode::Numerical
            }
        }
    }

    /// Combines outcomes of a batch: ingestion problems outrank numerical ones.
    pub fn worst(self, other: Self) -> Self {
        let rank = |c: Self| match c {
            ExitCode::Success => 0,
            ExitCode::Numerical => 1,
            ExitCode::Usage => 2,
            ExitCode::Ingestion => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "manopt",
    version,
    about = "Newton-type solvers on the generalized Stiefel manifold and the Grassmannian"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for tangent-basis complements and direction sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Gradient-norm convergence threshold.
    #[arg(long, global = true)]
    pub grad_tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Eigenvalue cutoff of the truncated method.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// How Newton's equation is assembled.
    #[arg(long, global = true, value_enum)]
    pub hessian: Option<HessianArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HessianArg {
    Intrinsic,
    Extrinsic,
}

impl From<HessianArg> for HessianMode {
    fn from(h: HessianArg) -> Self {
        match h {
            HessianArg::Intrinsic => HessianMode::Intrinsic,
            HessianArg::Extrinsic => HessianMode::Extrinsic,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve every problem of a manifest with one or more methods.
    Solve(SolveArgs),
    /// Compare Stiefel and Grassmann Hessian spectra.
    Spectrum(SpectrumArgs),
    /// Map convergence neighborhoods around reference solutions.
    Neighborhood(NeighborhoodArgs),
    /// Build performance profiles from summary or radii tables.
    Profile(ProfileArgs),
    /// Run derivative, step and geodesic consistency checks.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// rnm_gr, rnm_st, mrnm_st or nmlm; comma-separated for several.
    #[arg(long = "method", value_delimiter = ',', default_value = "rnm_gr")]
    pub methods: Vec<Method>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated cutoffs; every mrnm_st run is repeated for each.
    #[arg(long, value_delimiter = ',')]
    pub delta_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum At {
    Initial,
    Solution,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Evaluate at the starting point or at a converged solution.
    #[arg(long, value_enum, default_value = "initial")]
    pub at: At,
    /// Method that produces the solution for `--at solution`.
    #[arg(long, default_value = "rnm_gr")]
    pub method: Method,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NeighborhoodArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Methods whose neighborhoods are mapped; comma-separated.
    #[arg(long = "method", value_delimiter = ',', default_value = "rnm_gr")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub t_step: f64,
    /// Subsample this many basis directions (each used with both signs).
    #[arg(long)]
    pub max_directions: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileMetric {
    Iterations,
    RMin,
    RAvg,
    RMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    PerProblem,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientationArg {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Summary CSVs (iterations) or radii CSVs (r_min, r_avg, r_max).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "iterations")]
    pub metric: ProfileMetric,
    #[arg(long, value_enum, default_value = "per-problem")]
    pub baseline: BaselineArg,
    /// Defaults to lower-is-better for iterations and higher-is-better for radii.
    #[arg(long, value_enum)]
    pub orientation: Option<OrientationArg>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ProfileArgs {
    fn orientation(&self) -> Orientation {
        match (self.orientation, self.metric) {
            (Some(OrientationArg::LowerIsBetter), _) => Orientation::LowerIsBetter,
            (Some(OrientationArg::HigherIsBetter), _) => Orientation::HigherIsBetter,
            (None, ProfileMetric::Iterations) => Orientation::LowerIsBetter,
            (None, _) => Orientation::HigherIsBetter,
        }
    }

    fn baseline(&self) -> RatioBaseline {
        match self.baseline {
            BaselineArg::PerProblem => RatioBaseline::PerProblem,
            BaselineArg::Global => RatioBaseline::Global,
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Also write the results as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GlobalArgs {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Defaults, then the problem's overrides, then command-line flags.
    pub fn config(&self, method: Method, problem: &Problem) -> SolverConfig {
        let mut cfg = problem.config(&SolverConfig::new(method));
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.grad_tol {
            cfg.grad_tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(h) = self.hessian {
            // The truncated method only exists in intrinsic form.
            if method != Method::MrnmSt {
                cfg.hessian_mode = h.into();
            }
        }
        cfg
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Usage } else { ExitCode::Success };
            let _ = e.print();
            return code as i32;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("MANOPT_LOG", "info"))
        .format_timestamp(None)
        .try_init();

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            error!("cannot start worker pool: {e}");
            return ExitCode::Usage as i32;
        }
    };
    let code = pool.install(|| match &cli.command {
        Command::Solve(a) => solve::run(&cli.global, a),
        Command::Spectrum(a) => spectrum::run(&cli.global, a),
        Command::Neighborhood(a) => neighborhood::run(&cli.global, a),
        Command::Profile(a) => profile::run(a),
        Command::Check(a) => check::run(&cli.global, a),
    });
    let code = code.unwrap_or_else(|e| {
        error!("{e}");
        ExitCode::of(&e)
    });
    code as i32
}

/// Loads and builds a manifest. Problems that fail to build are logged and
/// reported through the returned exit code.
fn load_problems(path: &std::path::Path) -> crate::error::Result<(Vec<Problem>, ExitCode)> {
    let manifest = ProblemManifest::load(path)?;
    let mut problems = Vec::new();
    let mut code = ExitCode::Success;
    for (id, built) in manifest.build_all() {
        match built {
            Ok(p) => problems.push(p),
            Err(e) => {
                error!("{id}: {e}");
                code = code.worst(ExitCode::of(&e));
            }
        }
    }
    Ok((problems, code))
}

/// Runs the solver from the problem's start and tags the trace with it.
fn solve_problem(problem: &Problem, cfg: &SolverConfig) -> crate::error::Result<SolverTrace> {
    let mut trace = crate::solvers::solve(problem.cost.as_ref(), &problem.x0, cfg)?;
    trace.initial = problem.initial.clone();
    Ok(trace)
}

/// Converged end point as a Grassmann-tagged point, S-orthonormalized when
/// it came from the Lagrangian method.
fn final_point(problem: &Problem, trace: &SolverTrace) -> crate::error::Result<ManifoldPoint> {
    let metric = Arc::clone(problem.cost.metric());
    let c = if trace.config.method == Method::Nmlm {
        s_orthonormalize(&trace.final_point, &metric)?
    } else {
        trace.final_point.clone()
    };
    ManifoldPoint::new(c, metric, Manifold::Grassmann)
}
