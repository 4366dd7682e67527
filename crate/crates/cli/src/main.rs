mod commands;
mod input;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{CompareArgs, InterveneArgs, RouteArgs, SimulateArgs, SurveilArgs};
use manifest::Manifest;

/// Surveillance priority maps, budgeted interventions, spread simulation and
/// routing on wildfire spreading graphs.
#[derive(Debug, Parser)]
#[command(name = "firemap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Surveillance priority map for a discount rate.
    Surveil(SurveilArgs),
    /// Budgeted rate reductions and the resulting cost-to-go map.
    Intervene(InterveneArgs),
    /// Simulate fire spread with one of the three models.
    Simulate(SimulateArgs),
    /// Closed tour over the targets of an intervention report.
    Route(RouteArgs),
    /// Run all three simulators from one ignition and check their ordering.
    CompareModels(CompareArgs),
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

fn run(args: Vec<String>) -> Result<()> {
    let cli =
        Cli::try_parse_from(std::iter::once("firemap".to_string()).chain(args.iter().cloned()))
            .unwrap_or_else(|e| e.exit());
    if let Command::Replay { manifest } = &cli.command {
        let text = std::fs::read_to_string(manifest)
            .with_context(|| format!("reading {}", manifest.display()))?;
        let recorded = Manifest::parse(&text)?;
        if recorded.args.first().map(String::as_str) == Some("replay") {
            anyhow::bail!("manifest records a replay");
        }
        if let Some(cmd) = recorded.get("command") {
            eprintln!("replaying {cmd} in {}", recorded.cwd.display());
        }
        std::env::set_current_dir(&recorded.cwd)
            .with_context(|| format!("entering {}", recorded.cwd.display()))?;
        return run(recorded.args);
    }
    let cwd = std::env::current_dir().context("reading the working directory")?;
    let mut m = Manifest::new(cwd, args);
    m.set("command", command_name(&cli.command));
    match cli.command {
        Command::Surveil(a) => commands::surveil(a, m),
        Command::Intervene(a) => commands::intervene(a, m),
        Command::Simulate(a) => commands::simulate(a, m),
        Command::Route(a) => commands::route(a, m),
        Command::CompareModels(a) => commands::compare_models(a, m),
        Command::Replay { .. } => unreachable!("handled above"),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Surveil(_) => "surveil",
        Command::Intervene(_) => "intervene",
        Command::Simulate(_) => "simulate",
        Command::Route(_) => "route",
        Command::CompareModels(_) => "compare-models",
        Command::Replay { .. } => "replay",
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args_os()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
