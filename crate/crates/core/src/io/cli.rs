//! Command-line entry point.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::driver::PermeabilityScenario;
use crate::error::Result;
use crate::flow::CapillaryMode;
use crate::io::config::parse_config;
use crate::io::output::RunStatus;
use crate::io::run::execute;

/// Exit status of a clean run.
pub const EXIT_OK: i32 = 0;
/// Bad arguments or configuration.
pub const EXIT_CONFIG: i32 = 1;
/// A step failed to converge or a linear solve broke down.
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nanoflow", version, about = "Two-phase flow with nanoparticle transport")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation and write snapshots, time series and a run report.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `time.until_pvi`.
    #[arg(long)]
    pub until_pvi: Option<f64>,
    /// Overrides the random permeability seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub capillary_mode: Option<CapillaryModeArg>,
    /// Overrides `output.snapshot_every_pvi`.
    #[arg(long)]
    pub snapshot_every_pvi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapillaryModeArg {
    Linearized,
    Lagged,
}

impl From<CapillaryModeArg> for CapillaryMode {
    fn from(m: CapillaryModeArg) -> Self {
        match m {
            CapillaryModeArg::Linearized => CapillaryMode::LinearizedCoupled,
            CapillaryModeArg::Lagged => CapillaryMode::LaggedExplicit,
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                if e.is_numerical() {
                    EXIT_NUMERICAL
                } else {
                    EXIT_CONFIG
                }
            }
        },
    }
}

fn run(args: &RunArgs) -> Result<i32> {
    let mut config = parse_config(&args.config)?;
    if let Some(pvi) = args.until_pvi {
        config.target_pvi = pvi;
    }
    if let Some(seed) = args.seed {
        match &mut config.permeability {
            PermeabilityScenario::Random { seed: s, .. } => *s = seed,
            _ => log::warn!("--seed ignored: permeability scenario is not random"),
        }
    }
    if let Some(mode) = args.capillary_mode {
        config.controls.capillary_mode = mode.into();
    }
    if let Some(every) = args.snapshot_every_pvi {
        config.snapshot_every_pvi = every;
    }
    config.validate()?;

    let report = execute(config, &args.out)?;
    match report.status {
        RunStatus::Completed => {
            println!(
                "completed {} steps to {:.4} PVI; water residual {:.2e}, particle residual {:.2e}",
                report.steps, report.final_pvi, report.water_residual, report.particle_residual
            );
            Ok(EXIT_OK)
        }
        RunStatus::Failed => {
            eprintln!(
                "failed after {} steps: {}",
                report.steps,
                report.error.as_deref().unwrap_or("numerical failure")
            );
            let dump = args.out.join("failed_step.json");
            if let Ok(text) = std::fs::read_to_string(&dump) {
                eprintln!("{text}");
            }
            Ok(EXIT_NUMERICAL)
        }
    }
}
