mod commands;
mod config;
mod error;
mod manifest;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Simulation;
use config::{AnalyzeConfig, GgeConfig, RunConfig};
use error::{CliError, CliResult};

/// Stabilizer Renyi entropies of monitored free-fermion chains.
#[derive(Parser)]
#[command(name = "fmagic", version)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output root; overrides the configuration and $FMAGIC_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unmonitored quench dynamics.
    Quench,
    /// Projectively monitored trajectories.
    Monitor,
    /// Post-selected no-click evolution.
    Noclick,
    /// Closed-form stationary subsystem entropies.
    Gge,
    /// Stationary averages and scaling fits from ensemble CSVs.
    Analyze,
    /// Dense-oracle validation suite.
    Oracle,
}

fn required_config(cli: &Cli) -> CliResult<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| CliError::config("--config <path> is required for this command"))
}

fn simulate(cli: &Cli, kind: Simulation) -> CliResult<PathBuf> {
    let mut cfg: RunConfig = config::load(required_config(cli)?)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    let root = output::output_root(cli.out.as_deref(), cfg.output_dir.as_deref());
    commands::run_simulation(kind, cfg, &root)
}

fn dispatch(cli: &Cli) -> CliResult<PathBuf> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Quench => simulate(cli, Simulation::Quench),
        Command::Monitor => simulate(cli, Simulation::Monitor),
        Command::Noclick => simulate(cli, Simulation::NoClick),
        Command::Gge => {
            let cfg: GgeConfig = config::load(required_config(cli)?)?;
            let root = output::output_root(cli.out.as_deref(), cfg.output_dir.as_deref());
            commands::run_gge(cfg, &root)
        }
        Command::Analyze => {
            let cfg: AnalyzeConfig = config::load(required_config(cli)?)?;
            let root = output::output_root(cli.out.as_deref(), cfg.output_dir.as_deref());
            commands::run_analyze(cfg, &root)
        }
        Command::Oracle => {
            let root = output::output_root(cli.out.as_deref(), None);
            let (dir, checks) = commands::run_oracle(cli.seed.unwrap_or(0), &root)?;
            for c in &checks {
                let verdict = if c.passed() { "PASS" } else { "FAIL" };
                eprintln!(
                    "{verdict} {}: max error {:.2e} (tolerance {:.0e})",
                    c.name, c.max_error, c.tolerance
                );
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                println!("{}", dir.display());
                return Err(CliError::OracleFailed(failed));
            }
            Ok(dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fmagic: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
