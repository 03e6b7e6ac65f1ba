//! `rdmft` command-line driver.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rdmft_core::{Error, Result};

use crate::commands::Context;
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "rdmft",
    version,
    about = "Finite-temperature 1RDM functional theory in a finite basis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the top-level `seed` of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gibbs states, free energies and 1RDMs over a β and potential grid.
    Gibbs(CommonArgs),
    /// Potential that reproduces a target 1RDM.
    Invert(CommonArgs),
    /// Universal functional values, gradients and segment scans.
    Functional(CommonArgs),
    /// Seeded property checks with JSON and CSV reports.
    Verify(CommonArgs),
    /// Vertex decomposition of occupation numbers.
    Polytope(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Failures = 1,
    ConfigError = 2,
    NonRepresentable = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn of_error(e: &Error) -> Status {
        match e {
            Error::Config(_) => Status::ConfigError,
            Error::NonRepresentable(_) | Error::NotRepresentable(_) | Error::InfeasibleOccupations(_) => {
                Status::NonRepresentable
            }
            _ => Status::Failures,
        }
    }
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Gibbs(a)
            | Command::Invert(a)
            | Command::Functional(a)
            | Command::Verify(a)
            | Command::Polytope(a) => a,
        }
    }
}

pub fn run(command: &Command) -> Result<Status> {
    let args = command.args();
    let config = RunConfig::load(&args.config)?.with_seed(args.seed);
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let ctx = Context {
        config,
        base,
        out: args.out.clone(),
    };
    match command {
        Command::Gibbs(_) => commands::gibbs(&ctx),
        Command::Invert(_) => commands::invert(&ctx),
        Command::Functional(_) => commands::functional(&ctx),
        Command::Verify(_) => commands::verify(&ctx),
        Command::Polytope(_) => commands::polytope(&ctx),
    }
}
