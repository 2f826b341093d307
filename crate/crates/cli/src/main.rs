//! `fear`: analyse fixtures, run scenario batches, and report on them.
//!
//! Set `FEAR_THREADS` to bound the worker pool.
//! Exit codes: 0 success, 1 usage, 2 validation, 3 runtime.

mod commands;
mod manifest;
mod plot;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{AnalyzeArgs, CliError, SimulateArgs};
use fear_core::ScenarioKind;

#[derive(Parser)]
#[command(name = "fear", version, about = "Feasible action-space reduction for individuals and groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Aggressive,
    Directed,
    Random,
    Fixture,
}

impl From<Scenario> for ScenarioKind {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::Aggressive => ScenarioKind::Aggressive,
            Scenario::Directed => ScenarioKind::Directed,
            Scenario::Random => ScenarioKind::Random,
            Scenario::Fixture => ScenarioKind::Fixture,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one fixture: FeAR matrix, tiers, influences, Shapley values,
    /// ranks and taus.
    Analyze {
        /// Fixture JSON file or bundled fixture name.
        fixture: String,
        /// Only show this affected agent.
        #[arg(long)]
        affected: Option<usize>,
        /// Write the full analysis as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Run randomised scenario batches and write case records.
    Simulate {
        /// Scenario to run; repeat for several.
        #[arg(long = "scenario", value_enum)]
        scenarios: Vec<Scenario>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 50)]
        n_sims: usize,
        #[arg(long, default_value_t = 5)]
        n_iters: usize,
        #[arg(long, default_value_t = 8)]
        n_agents: usize,
        /// Fixture replayed by the `fixture` scenario.
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Scenario configs as JSON, or a manifest from an earlier run.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate case files into a CSV and SVG plots.
    Report {
        #[arg(required = true)]
        cases: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FEAR_THREADS") else { return Ok(()) };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("FEAR_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn run(cli: Cli, argv: &[String]) -> Result<String, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { fixture, affected, out, json } => {
            commands::analyze(&AnalyzeArgs { fixture, affected, out, json }, argv)
        }
        Command::Simulate { scenarios, seed, n_sims, n_iters, n_agents, fixture, config, out } => commands::simulate(
            &SimulateArgs { scenarios: scenarios.into_iter().map(Into::into).collect(), seed, n_sims, n_iters, n_agents, fixture, config, out },
            argv,
        ),
        Command::Report { cases, out } => commands::report(&cases, &out, argv),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(cli, &argv) {
        Ok(text) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
