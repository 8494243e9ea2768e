//! `srsim`: scenario-driven front end for the superradiance toolkit.
//!
//! Verbs: `run` (built-in scenario or config file), `sweep` (rerun a config
//! over a gamma/g grid), `diff` (column-wise comparison of outputs),
//! `list-scenarios`. Exit codes: 0 success, 2 configuration error,
//! 3 solver capacity exceeded, 4 numerical-quality flag.

mod config;
mod diff;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, Solver};
use scenario::RunContext;

/// Error type carrying the exit-code class alongside the message.
#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ErrorKind {
    /// bad flags, config files, or unsupported parameter combinations
    Config,
    /// the requested system exceeds a solver's hard size limit
    Capacity,
    /// outputs exist but a numerical-quality flag fired
    Quality,
    /// filesystem trouble
    Io,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Config, message: message.into() }
    }

    pub fn quality(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Quality, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Io, message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Io => 1,
            ErrorKind::Config => 2,
            ErrorKind::Capacity => 3,
            ErrorKind::Quality => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<superradiance::Error> for CliError {
    fn from(e: superradiance::Error) -> Self {
        use superradiance::Error as E;
        let kind = match &e {
            E::DimensionLimit { .. } => ErrorKind::Capacity,
            E::StepSizeUnderflow { .. }
            | E::StepBudgetExceeded { .. }
            | E::EigenNoConvergence { .. }
            | E::Internal(_) => ErrorKind::Quality,
            _ => ErrorKind::Config,
        };
        CliError { kind, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(
    name = "srsim",
    version,
    about = "Collective-emission simulator: superradiant bursts, entanglement \
             witnesses, and collective-sector analysis for N two-level emitters \
             in a lossy cavity"
)]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario (fig1..fig4) or a config file
    Run {
        /// Scenario name or path to a TOML config
        target: String,
        /// Override the solver: exact, cluster, or both
        #[arg(long)]
        solver: Option<String>,
        /// Directory for output files
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the pure-dephasing rate (units of g)
        #[arg(long)]
        gamma_phi_over_g: Option<f64>,
        /// Override the emitter count
        #[arg(long)]
        n_emitters: Option<usize>,
        /// Freeze pair correlations in cluster runs (independent-emitter model)
        #[arg(long)]
        no_correlations: bool,
        /// Threshold-sweep grid for fig4, as start:end:count in gamma/g
        #[arg(long)]
        sweep_gamma: Option<String>,
    },
    /// Rerun one config over a gamma/g grid and summarize every point
    Sweep {
        /// Path to a TOML config
        config: PathBuf,
        /// Grid over the emitter decay rate, as start:end:count in gamma/g
        #[arg(long)]
        gamma: String,
        /// Directory for output files
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the solver: exact or cluster
        #[arg(long)]
        solver: Option<String>,
        /// Override the pure-dephasing rate (units of g)
        #[arg(long)]
        gamma_phi_over_g: Option<f64>,
        /// Override the emitter count
        #[arg(long)]
        n_emitters: Option<usize>,
        /// Freeze pair correlations in cluster runs
        #[arg(long)]
        no_correlations: bool,
    },
    /// Compare two output CSVs (or two run manifests) column by column
    Diff {
        a: PathBuf,
        b: PathBuf,
    },
    /// List the built-in scenarios
    ListScenarios,
}

fn parse_overrides(
    solver: Option<String>,
    gamma_phi_over_g: Option<f64>,
    n_emitters: Option<usize>,
    no_correlations: bool,
) -> Result<Overrides, CliError> {
    let solver = solver.map(|s| Solver::parse(&s)).transpose()?;
    Ok(Overrides { solver, gamma_phi_over_g, n_emitters, no_correlations })
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot size the worker pool: {e}")))?;
    }
    match cli.command {
        Command::Run {
            target,
            solver,
            out_dir,
            gamma_phi_over_g,
            n_emitters,
            no_correlations,
            sweep_gamma,
        } => {
            let ctx = RunContext {
                out_dir,
                overrides: parse_overrides(solver, gamma_phi_over_g, n_emitters, no_correlations)?,
                sweep_gamma,
            };
            scenario::run_target(&target, &ctx)
        }
        Command::Sweep {
            config,
            gamma,
            out_dir,
            solver,
            gamma_phi_over_g,
            n_emitters,
            no_correlations,
        } => {
            let overrides =
                parse_overrides(solver, gamma_phi_over_g, n_emitters, no_correlations)?;
            scenario::run_sweep(&config, &gamma, &out_dir, &overrides)
        }
        Command::Diff { a, b } => diff::run_diff(&a, &b),
        Command::ListScenarios => {
            scenario::list_scenarios();
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
