pub mod crystal;
pub mod delay;
pub mod doubleslit;
pub mod field;
pub mod lightcone;
pub mod sewing;

use std::path::Path;

use ndde_core::PiecewiseTrajectory;
use serde::de::DeserializeOwned;

use crate::{invalid, CliError, Command, CrystalCommand};

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ndde(a) => delay::run(a),
        Command::Lightcone(a) => lightcone::run(a),
        Command::FieldProbe(a) => field::run(a),
        Command::Sewing(a) => sewing::run(a),
        Command::Doubleslit(a) => doubleslit::run(a),
        Command::Crystal(CrystalCommand::Hamiltonian(a)) => crystal::run_hamiltonian(a),
        Command::Crystal(CrystalCommand::KickSweep(a)) => crystal::run_kick_sweep(a),
        Command::Crystal(CrystalCommand::Vonlaue(a)) => crystal::run_vonlaue(a),
    }
}

/// The config file's contents, or the defaults without one.
pub fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C, CliError> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))
        }
    }
}

pub fn load_trajectory(path: &Path) -> Result<PiecewiseTrajectory, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    PiecewiseTrajectory::from_json(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Overwrites `$target` with every flag that was given.
macro_rules! apply {
    ($cfg:ident, $args:ident, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v.into(); })+
    };
}
pub(crate) use apply;

pub fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn finite(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}
