//! `hjb`: solves, convergence studies and property checks for the Bellman
//! solver in `hjb-core`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
//! 3 solver failure, 4 a check suite found a counterexample.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hjb_core::solver::Method;
use thiserror::Error;

use config::{Command, ReferenceKind, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solve(String),
    #[error("{0}")]
    CheckFailed(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solve(_) => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hjb", version, about = "Monotone finite-difference solver for elliptic Bellman equations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve one problem on one grid.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Grid step.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Measure the convergence rate over a sequence of steps.
    Study {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated, strictly decreasing steps.
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        reference: Option<ReferenceArg>,
        /// Fine-grid reference step.
        #[arg(long)]
        h_ref: Option<f64>,
        /// Also write rate.svg.
        #[arg(long)]
        plot: bool,
        #[arg(long)]
        monitor_pairs: Option<usize>,
    },
    /// Run the randomized property suites.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Suites to run (comma-separated); all of them by default.
        #[arg(long, value_delimiter = ',')]
        suite: Option<Vec<String>>,
        /// Grid step for the solver-based suites.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Decompose a symmetric matrix over a direction set.
    Decompose {
        #[command(flatten)]
        common: CommonArgs,
        /// Matrix as JSON rows, e.g. `[[2,1],[1,2]]`.
        #[arg(long)]
        matrix: Option<String>,
        /// Directions as JSON rows; the canonical set by default.
        #[arg(long)]
        directions: Option<String>,
        /// Lower bound for every coefficient.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Print the problem catalogue.
    ListProblems {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run whatever command a configuration file names.
    Run {
        config: PathBuf,
        /// Print the effective configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on simultaneous node-update workers.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// Catalogue name; see `list-problems`.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n_controls: Option<usize>,
    #[arg(long)]
    f_scale: Option<f64>,
    /// Admit c0 = 0 for the Monge-Ampère problem.
    #[arg(long)]
    allow_outside_theory: bool,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    linear_tol: Option<f64>,
    #[arg(long)]
    relaxation: Option<f64>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum ReferenceArg {
    Auto,
    Exact,
    FineGrid,
}

fn base(common: &CommonArgs, command: Command) -> Result<RunConfig, CliError> {
    let mut c = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    c.command = command;
    if let Some(o) = &common.out {
        c.output_dir = o.clone();
    }
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if common.threads.is_some() {
        c.threads = common.threads;
    }
    Ok(c)
}

fn apply_problem(c: &mut RunConfig, a: ProblemArgs) {
    if let Some(name) = a.problem {
        if name != c.problem.name {
            c.problem = hjb_core::problem::ProblemConfig::named(name);
        }
    }
    let p = &mut c.problem;
    p.c0 = a.c0.or(p.c0);
    p.gamma = a.gamma.or(p.gamma);
    p.n_controls = a.n_controls.or(p.n_controls);
    p.f_scale = a.f_scale.or(p.f_scale);
    p.allow_outside_theory |= a.allow_outside_theory;
}

fn apply_solver(c: &mut RunConfig, a: SolverArgs) {
    c.method = a.method.unwrap_or(c.method);
    c.tol = a.tol.unwrap_or(c.tol);
    c.max_iter = a.max_iter.unwrap_or(c.max_iter);
    c.linear_tol = a.linear_tol.or(c.linear_tol);
    c.relaxation = a.relaxation.or(c.relaxation);
}

fn parse_json<T: serde::de::DeserializeOwned>(flag: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("--{flag}: {e}")))
}

/// Effective configuration plus whether only printing was requested.
fn resolve(cmd: Cmd) -> Result<(RunConfig, bool), CliError> {
    Ok(match cmd {
        Cmd::Solve { common, problem, solver, h } => {
            let mut c = base(&common, Command::Solve)?;
            apply_problem(&mut c, problem);
            apply_solver(&mut c, solver);
            c.h = h.unwrap_or(c.h);
            (c, common.print_config)
        }
        Cmd::Study { common, problem, solver, h_list, reference, h_ref, plot, monitor_pairs } => {
            let mut c = base(&common, Command::Study)?;
            apply_problem(&mut c, problem);
            apply_solver(&mut c, solver);
            c.h_list = h_list.unwrap_or(c.h_list);
            if let Some(r) = reference {
                c.reference = match r {
                    ReferenceArg::Auto => ReferenceKind::Auto,
                    ReferenceArg::Exact => ReferenceKind::Exact,
                    ReferenceArg::FineGrid => ReferenceKind::FineGrid,
                };
            }
            c.h_ref = h_ref.or(c.h_ref);
            c.plot |= plot;
            c.monitor_pairs = monitor_pairs.unwrap_or(c.monitor_pairs);
            (c, common.print_config)
        }
        Cmd::Check { common, suite, h, tol } => {
            let mut c = base(&common, Command::Check)?;
            c.suites = suite.unwrap_or(c.suites);
            c.check_h = h.unwrap_or(c.check_h);
            c.tol = tol.unwrap_or(c.tol);
            (c, common.print_config)
        }
        Cmd::Decompose { common, matrix, directions, floor } => {
            let mut c = base(&common, Command::Decompose)?;
            if let Some(m) = matrix {
                c.matrix = Some(parse_json("matrix", &m)?);
            }
            if let Some(d) = directions {
                c.directions = Some(parse_json("directions", &d)?);
            }
            c.floor = floor.unwrap_or(c.floor);
            (c, common.print_config)
        }
        Cmd::ListProblems { .. } => unreachable!("handled before resolution"),
        Cmd::Run { config, print_config } => (RunConfig::load(&config)?, print_config),
    })
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    if let Cmd::ListProblems { json } = cmd {
        commands::list_problems(json);
        return Ok(());
    }
    let (config, print_only) = resolve(cmd)?;
    config.validate()?;
    if print_only {
        println!("{}", config.to_json());
        return Ok(());
    }
    match config.command {
        Command::Solve => commands::solve(&config),
        Command::Study => commands::study(&config),
        Command::Check => commands::check(&config),
        Command::Decompose => commands::decompose(&config),
        Command::ListProblems => {
            commands::list_problems(false);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
