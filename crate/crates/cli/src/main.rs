//! `floquet-pt`: runs the lattice experiments described by a JSON config and
//! writes CSV tables, JSON summaries and SVG plots.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::Experiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Quasienergies and complex fraction along a parameter sweep.
    Spectrum,
    /// Complex fraction over parameter and chain length, with onset points.
    PhaseDiagram,
    /// One pair of Floquet multipliers followed along a sweep.
    Trajectory,
    /// Size scaling of the complex quasienergies and state profiles.
    ScaleFree,
    /// Non-Hermitian correction to the averaged Hamiltonian.
    Perturbation,
    /// Construction conditions of a model.
    ValidateModel,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::PhaseDiagram => "phase-diagram",
            Self::Trajectory => "trajectory",
            Self::ScaleFree => "scale-free",
            Self::Perturbation => "perturbation",
            Self::ValidateModel => "validate-model",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "floquet-pt", version, about = "Experiments on driven PT-symmetric lattices")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `workers` in the config.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", format_list(.0))]
    Config(Vec<String>),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(#[from] floquet_core::Error),
}

fn format_list(items: &[String]) -> String {
    items.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Output { .. } => 2,
            Self::Numerical(_) => 3,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let exp = Experiment::load(&cli.config, cli.command, cli.out.as_deref(), cli.workers)?;
    let written = match cli.command {
        Command::Spectrum => commands::spectrum(&exp)?,
        Command::PhaseDiagram => commands::phase_diagram(&exp)?,
        Command::Trajectory => commands::trajectory(&exp)?,
        Command::ScaleFree => commands::scale_free(&exp)?,
        Command::Perturbation => commands::perturbation(&exp)?,
        Command::ValidateModel => commands::validate_model(&exp)?,
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("floquet-pt {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
