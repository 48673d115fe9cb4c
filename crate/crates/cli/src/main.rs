mod commands;
mod record;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "ldmcast", version, about = "Joint BS clustering and beamforming for layered multicast/unicast")]
struct Cli {
    /// Worker threads for sweeps and concurrent restarts.
    #[arg(long, global = true, env = "LDM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a network realization from a scenario config and write it as JSON.
    Generate {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve one instance and write a result record.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum)]
        solver: SolverKind,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Per-iteration trace CSV (bb and ccp).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        params: SolverParams,
    },
    /// Solve a set of instances across one parameter axis.
    Sweep(SweepArgs),
    /// Check a result record against its instance.
    Validate {
        instance: PathBuf,
        result: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Bb,
    Ccp,
    Tdm,
    Static,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bb => "bb",
            SolverKind::Ccp => "ccp",
            SolverKind::Tdm => "tdm",
            SolverKind::Static => "static",
        }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SolverParams {
    /// Multicast weight; defaults to the instance's value.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Branch-and-bound tolerance, bits/s/Hz.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub bb_max_iter: usize,
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit_s: f64,
    /// Split relaxed binaries before continuous coordinates.
    #[arg(long)]
    pub binary_first: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub theta: f64,
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    pub power_threshold_dbm: f64,
    #[arg(long, default_value_t = 40)]
    pub ccp_max_iter: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub ccp_rel_tol: f64,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    /// Seed of the first CCP restart.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time fraction given to multicast under TDM.
    #[arg(long, default_value_t = 0.5)]
    pub t_m: f64,
    /// BSs per user for the static clustering (defaults to all).
    #[arg(long)]
    pub cluster_size: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Uniform backhaul capacity, Mbps.
    Backhaul,
    Eta,
    #[value(name = "t_m")]
    TM,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Backhaul => "backhaul_mbps",
            Axis::Eta => "eta",
            Axis::TM => "t_m",
        }
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Instance files; alternatively --config with --seeds.
    #[arg(long, num_args = 1.., conflicts_with = "config")]
    pub instances: Vec<PathBuf>,
    #[arg(long, requires = "seeds")]
    pub config: Option<PathBuf>,
    /// `a..b` or a comma list.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub values: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ccp")]
    pub solvers: Vec<SolverKind>,
    /// Per-cell CSV.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Per-value means across seeds.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub params: SolverParams,
}

/// Failure classes, one per nonzero exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solve(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solve(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Solve(_) => "solve",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Solve(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ldmcast::Error> for CliError {
    fn from(e: ldmcast::Error) -> Self {
        use ldmcast::Error as E;
        match e {
            E::Io(_) => CliError::Io(e.to_string()),
            E::Solver(_) | E::MalformedProgram(_) => CliError::Solve(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let res = match cli.command {
        Command::Generate { config, out, seed } => commands::generate(&config, &out, seed),
        Command::Solve { instance, solver, out, trace, params } => {
            commands::solve(&instance, solver, out.as_deref(), trace.as_deref(), &params)
        }
        Command::Sweep(args) => commands::sweep(&args),
        Command::Validate { instance, result, tol } => commands::validate(&instance, &result, tol),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
