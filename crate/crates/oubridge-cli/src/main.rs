//! `oubl`: command-line front end for the oubridge library.
//!
//! Exit codes: 0 pass, 2 verified failure, 3 numerical error, 64 usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{GridSpec, Method, RunConfig};

pub const EXIT_FAIL: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<oubridge::Error> for CliError {
    fn from(e: oubridge::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "oubl", version, about = "Gauss-Markov processes as time-changed stationary OU processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the family registry and its parameter keys
    Families(FamiliesArgs),
    /// Tabulate cov(s, t) next to v(s) v(t) exp(-|β(t) - β(s)|/2)
    Kernel(KernelArgs),
    /// Check the OU representation of a family or kernel
    Verify(VerifyArgs),
    /// Estimate sup and limit of φ Q^(1/2+ε) towards the horizon
    Boundedness(BoundednessArgs),
    /// Sample paths of a family
    Simulate(SimulateArgs),
    /// Compare exact-kernel and OU-transform sample covariances
    Compare(CompareArgs),
    /// Density of the supremum location
    Suploc(SuplocArgs),
    /// Map an interval of a standardized process to its OU interval
    Reduce(ReduceArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; explicit flags take precedence
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory receiving all output files; results go to stdout when absent
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel loops
    #[arg(long, value_name = "N", env = "OUBL_THREADS", hide_env_values = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct FamilyArgs {
    /// Family key, see `oubl families`
    #[arg(long, value_name = "KEY")]
    family: Option<String>,
    /// Family parameters as a JSON object
    #[arg(long, value_name = "JSON")]
    params: Option<String>,
}

#[derive(Args)]
struct FamiliesArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    family: FamilyArgs,
    /// Point count (Chebyshev layout) or comma-separated times [default: 16]
    #[arg(long, value_name = "N|LIST")]
    grid: Option<GridSpec>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    family: FamilyArgs,
    /// Point count (Chebyshev layout) or comma-separated times [default: Chebyshev plus geometric end points]
    #[arg(long, value_name = "N|LIST")]
    grid: Option<GridSpec>,
    /// Tolerance on the covariance identity [default: 1e-8 closed form, 1e-6 quadrature]
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
}

#[derive(Args)]
struct BoundednessArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    family: FamilyArgs,
    /// Exponent ε [default: the family's known value]
    #[arg(long, value_name = "EPS")]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    family: FamilyArgs,
    /// Point count (uniform interior layout) or comma-separated times [default: 9]
    #[arg(long, value_name = "N|LIST")]
    grid: Option<GridSpec>,
    /// Sampling route [default: exact]
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Number of paths [default: 1000]
    #[arg(long, value_name = "N")]
    paths: Option<usize>,
    /// Random seed [default: 0]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Euler step [default: 1e-3]
    #[arg(long, value_name = "DT")]
    dt: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    family: FamilyArgs,
    /// Point count (uniform interior layout) or comma-separated times [default: 8]
    #[arg(long, value_name = "N|LIST")]
    grid: Option<GridSpec>,
    /// Paths per route [default: 100000]
    #[arg(long, value_name = "N")]
    paths: Option<usize>,
    /// Random seed of the exact route; the OU route uses SEED + 1 [default: 0]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Largest accepted discrepancy in combined standard errors [default: 4]
    #[arg(long, value_name = "Z")]
    z_max: Option<f64>,
}

#[derive(Args)]
struct SolverArgs {
    /// Level truncation of the density integral [default: 8]
    #[arg(long, value_name = "Y")]
    y_max: Option<f64>,
    /// Gauss-Legendre levels of the main rule [default: 80]
    #[arg(long, value_name = "N")]
    y_nodes: Option<usize>,
    /// Gauss-Legendre levels of the residual rule [default: 64]
    #[arg(long, value_name = "N")]
    y_nodes_check: Option<usize>,
    /// Truncation of the Laplace inversion [default: 600]
    #[arg(long, value_name = "A")]
    alpha_max: Option<f64>,
    /// Number of subtracted asymptotic terms [default: 8]
    #[arg(long, value_name = "M")]
    order: Option<usize>,
    /// Shift of the subtracted asymptotic terms [default: 2]
    #[arg(long, value_name = "K")]
    kappa: Option<f64>,
    /// Relative tolerance of the Riccati integration [default: 1e-12]
    #[arg(long, value_name = "TOL")]
    ode_rtol: Option<f64>,
    /// Residual above TOL·max(1, f) flags a point [default: 1e-6]
    #[arg(long, value_name = "TOL")]
    residual_tol: Option<f64>,
    /// Gauss-Legendre nodes per half-window of mass integrals [default: 80]
    #[arg(long, value_name = "N")]
    mass_nodes: Option<usize>,
}

#[derive(Args)]
struct SuplocArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    family: FamilyArgs,
    /// Horizon of the stationary OU problem
    #[arg(long = "T", value_name = "T")]
    t_end: Option<f64>,
    /// Interval [t1, t2] of the standardized family process
    #[arg(long, num_args = 2, value_names = ["T1", "T2"])]
    interval: Option<Vec<f64>>,
    /// Point count (uniform interior layout) or comma-separated times [default: 101]
    #[arg(long, value_name = "N|LIST")]
    grid: Option<GridSpec>,
    /// Append Monte Carlo CDF columns from N paths
    #[arg(long, value_name = "N")]
    mc_check: Option<usize>,
    /// Intervals of the Monte Carlo path grid [default: 1024]
    #[arg(long, value_name = "N")]
    mc_grid: Option<usize>,
    /// Random seed of the Monte Carlo check [default: 0]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Exit with code 3 when any point is flagged by its residual
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    family: FamilyArgs,
    /// Interval [t1, t2] of the standardized family process
    #[arg(long, num_args = 2, value_names = ["T1", "T2"])]
    interval: Option<Vec<f64>>,
    /// Point count (uniform interior layout) or comma-separated times [default: 9]
    #[arg(long, value_name = "N|LIST")]
    grid: Option<GridSpec>,
}

fn base(name: &str, common: Common, family: Option<FamilyArgs>) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let (fam, params) = match family {
        Some(f) => {
            let params = match f.params {
                Some(p) => Some(serde_json::from_str(&p).map_err(|e| CliError::Usage(format!("bad --params: {e}")))?),
                None => None,
            };
            (f.family, params)
        }
        None => (None, None),
    };
    let cfg = RunConfig {
        command: Some(name.to_string()),
        family: fam,
        params,
        out: common.out,
        threads: common.threads,
        ..Default::default()
    };
    Ok((cfg, common.config))
}

fn interval(v: Option<Vec<f64>>) -> Option<[f64; 2]> {
    v.map(|v| [v[0], v[1]])
}

/// Flags as a partial configuration plus the `--config` path.
fn flags(cmd: Command) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    Ok(match cmd {
        Command::Families(a) => base("families", a.common, None)?,
        Command::Kernel(a) => {
            let (cfg, path) = base("kernel", a.common, Some(a.family))?;
            (RunConfig { grid: a.grid, ..cfg }, path)
        }
        Command::Verify(a) => {
            let (cfg, path) = base("verify", a.common, Some(a.family))?;
            (RunConfig { grid: a.grid, tol: a.tol, ..cfg }, path)
        }
        Command::Boundedness(a) => {
            let (cfg, path) = base("boundedness", a.common, Some(a.family))?;
            (RunConfig { epsilon: a.epsilon, ..cfg }, path)
        }
        Command::Simulate(a) => {
            let (cfg, path) = base("simulate", a.common, Some(a.family))?;
            (RunConfig { grid: a.grid, method: a.method, paths: a.paths, seed: a.seed, dt: a.dt, ..cfg }, path)
        }
        Command::Compare(a) => {
            let (cfg, path) = base("compare", a.common, Some(a.family))?;
            (RunConfig { grid: a.grid, paths: a.paths, seed: a.seed, z_max: a.z_max, ..cfg }, path)
        }
        Command::Suploc(a) => {
            let (cfg, path) = base("suploc", a.common, Some(a.family))?;
            let s = a.solver;
            (
                RunConfig {
                    t_end: a.t_end,
                    interval: interval(a.interval),
                    grid: a.grid,
                    mc_check: a.mc_check,
                    mc_grid: a.mc_grid,
                    seed: a.seed,
                    strict: a.strict.then_some(true),
                    y_max: s.y_max,
                    y_nodes: s.y_nodes,
                    y_nodes_check: s.y_nodes_check,
                    alpha_max: s.alpha_max,
                    order: s.order,
                    kappa: s.kappa,
                    ode_rtol: s.ode_rtol,
                    residual_tol: s.residual_tol,
                    mass_nodes: s.mass_nodes,
                    ..cfg
                },
                path,
            )
        }
        Command::Reduce(a) => {
            let (cfg, path) = base("reduce", a.common, Some(a.family))?;
            (RunConfig { interval: interval(a.interval), grid: a.grid, ..cfg }, path)
        }
    })
}

fn execute(cmd: Command) -> Result<commands::Status, CliError> {
    let (flag_cfg, path) = flags(cmd)?;
    let cfg = match path {
        Some(p) => {
            let file = RunConfig::load(&p)?;
            if let (Some(a), Some(b)) = (&file.command, &flag_cfg.command) {
                if a != b {
                    return Err(CliError::Usage(format!("config is for command '{a}', not '{b}'")));
                }
            }
            flag_cfg.over(file)
        }
        None => flag_cfg,
    };
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))?;
    }
    let output = commands::run(&cfg)?;
    output.emit(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(commands::Status::Pass) => ExitCode::SUCCESS,
        Ok(commands::Status::Fail) => ExitCode::from(EXIT_FAIL),
        Ok(commands::Status::Flagged) => ExitCode::from(EXIT_NUMERICAL),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("numerical error: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
