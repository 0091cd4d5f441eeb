//! `ndde` command-line front end.
//!
//! Every subcommand reads an optional JSON config file, applies flag
//! overrides, validates the result and only then computes. Exit codes:
//! `0` success, `1` numerical failure (partial output plus a failure record),
//! `2` usage or validation error.

mod commands;
mod output;
mod values;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::crystal::{CrystalRunConfig, KickSweepConfig, VonLaueConfig};
pub use commands::delay::{DelayKindArg, NddeConfig};
pub use commands::doubleslit::DoubleSlitConfig;
pub use commands::field::FieldProbeConfig;
pub use commands::lightcone::LightconeConfig;
pub use commands::sewing::{Scenario, SewingConfig};
pub use output::Format;
pub use values::{parse_scalar, parse_vec3};

pub const TOOL: &str = "ndde";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "NDDE_NUM_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// The failure record has already been written with any partial output.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

pub(crate) fn invalid(msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(msg.to_string())
}

#[derive(Debug, Parser)]
#[command(name = TOOL, version = VERSION, about = "Neutral delay electrodynamics toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scalar delay equation with unit delay and report its breaking points.
    Ndde(commands::delay::NddeArgs),
    /// Retarded and advanced lightcone times of an event on a worldline.
    Lightcone(commands::lightcone::LightconeArgs),
    /// Far fields of a moving charge at a fixed observer over a time window.
    FieldProbe(commands::field::FieldProbeArgs),
    /// Propagate a discontinuity chain between two worldlines.
    Sewing(commands::sewing::SewingArgs),
    /// De Broglie length estimate and Bragg directions of the slit model.
    Doubleslit(commands::doubleslit::DoubleSlitArgs),
    /// Periodic-potential scattering.
    #[command(subcommand)]
    Crystal(CrystalCommand),
}

#[derive(Debug, Subcommand)]
pub enum CrystalCommand {
    /// Single leapfrog run, CSV of t,x,y,px,py,H.
    Hamiltonian(commands::crystal::HamiltonianArgs),
    /// Ensemble of runs with random initial data, CSV of momentum kicks.
    KickSweep(commands::crystal::KickSweepArgs),
    /// Velocity change per reciprocal vector with its lattice delay check.
    Vonlaue(commands::crystal::VonLaueArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{TOOL}: {e}");
            e.exit_code()
        }
    }
}
