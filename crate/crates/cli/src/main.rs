use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod output;

use config::RunConfig;
use error::CliError;
use output::Output;

/// Simulate chirped-pulse preparation of ordered Rydberg excitations in atom chains.
#[derive(Debug, Parser)]
#[command(name = "rydchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config, or a manifest.json from an earlier run. Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV/JSON artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate the configured chain and write populations and densities.
    Evolve,
    /// Lowest instantaneous energies along the pulse and the minimal gap.
    Spectrum,
    /// Ω → 0 limit.
    Classical {
        #[command(subcommand)]
        what: ClassicalCommand,
    },
    /// Ground-state overlaps with reference states over a (Ω, Δ) grid.
    PhaseScan,
    /// Exact and Landau-Zener fidelities over chain lengths and durations.
    FidelitySweep,
    /// Two-level sweeps: adiabatic and dressed ground-state populations.
    LzDemo,
    /// Write the data behind one figure.
    ReproduceFigure { figure: Figure },
}

#[derive(Debug, Subcommand)]
enum ClassicalCommand {
    /// Minimal configuration of each excitation number and the crossings between them.
    Ladder,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    /// Classical energy levels against detuning.
    #[value(name = "1b")]
    LevelDiagram,
    /// Ground-state phase diagram and the pulse path through it.
    #[value(name = "1c")]
    PhaseDiagram,
    /// Pulse shape and configuration-basis dynamics.
    #[value(name = "2")]
    ConfigurationDynamics,
    /// Instantaneous spectrum with adiabatic and dressed populations.
    #[value(name = "3")]
    AdiabaticDynamics,
    /// Gap traces for several chain lengths and the scaling fit.
    #[value(name = "4a")]
    GapScaling,
    /// Preparation fidelity against duration.
    #[value(name = "4b")]
    Fidelity,
    /// A single two-level sweep.
    #[value(name = "5")]
    TwoLevel,
    /// Two-level dip recovery for several durations.
    #[value(name = "6")]
    TwoLevelDurations,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Schema("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    let mut out = Output::new(&cli.out, cli.quiet)?;
    let name = match &cli.command {
        Command::Evolve => {
            commands::evolve(&config, &mut out)?;
            "evolve".to_string()
        }
        Command::Spectrum => {
            commands::spectrum(&config, &mut out)?;
            "spectrum".to_string()
        }
        Command::Classical {
            what: ClassicalCommand::Ladder,
        } => {
            commands::classical_ladder(&config, &mut out)?;
            "classical ladder".to_string()
        }
        Command::PhaseScan => {
            commands::phase_scan(&config, &mut out)?;
            "phase-scan".to_string()
        }
        Command::FidelitySweep => {
            commands::fidelity_sweep(&config, &mut out)?;
            "fidelity-sweep".to_string()
        }
        Command::LzDemo => {
            commands::lz_demo(&config, &mut out)?;
            "lz-demo".to_string()
        }
        Command::ReproduceFigure { figure } => {
            reproduce(*figure, &config, &mut out)?;
            format!("reproduce-figure {}", figure.to_possible_value().expect("named figure").get_name())
        }
    };
    out.finish(&name, &config)
}

fn reproduce(figure: Figure, config: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    match figure {
        Figure::LevelDiagram => {
            commands::classical_ladder(config, out)?;
            commands::classical_levels(config, out)
        }
        Figure::PhaseDiagram => {
            commands::phase_scan(config, out)?;
            commands::controls(config, out, "pulse_path.csv")
        }
        Figure::ConfigurationDynamics => {
            commands::controls(config, out, "controls.csv")?;
            commands::configuration_dynamics(config, out)
        }
        Figure::AdiabaticDynamics => commands::adiabatic_dynamics(config, out),
        Figure::GapScaling => commands::gap_scaling(config, out),
        Figure::Fidelity => commands::fidelity_sweep(config, out),
        Figure::TwoLevel => commands::lz_single(config, out),
        Figure::TwoLevelDurations => commands::lz_demo(config, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
