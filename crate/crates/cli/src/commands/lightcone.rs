use std::path::PathBuf;

use clap::Args;
use ndde_core::lightcone::{solve_lightcone, Branch};
use ndde_core::{PiecewiseTrajectory, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{apply, finite, load, load_trajectory};
use crate::output::finish_json;
use crate::values::{parse_scalar, parse_vec3};
use crate::{invalid, CliError, CommonArgs};

/// Observer event and source worldline. Without a trajectory file the
/// source moves uniformly, `x(s) = position0 + velocity * s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightconeConfig {
    pub trajectory: Option<PathBuf>,
    pub position0: Vec3,
    pub velocity: Vec3,
    pub t_start: f64,
    pub t_end: f64,
    pub observer: Vec3,
    pub t: f64,
}

impl Default for LightconeConfig {
    fn default() -> Self {
        LightconeConfig {
            trajectory: None,
            position0: Vec3::ZERO,
            velocity: Vec3::new(0.5, 0.0, 0.0),
            t_start: -100.0,
            t_end: 100.0,
            observer: Vec3::ZERO,
            t: 1.5,
        }
    }
}

impl LightconeConfig {
    pub fn source(&self) -> Result<PiecewiseTrajectory, CliError> {
        if let Some(p) = &self.trajectory {
            return load_trajectory(p);
        }
        if !(self.position0.is_finite() && self.velocity.is_finite()) {
            return Err(invalid("position0 and velocity must be finite"));
        }
        PiecewiseTrajectory::uniform(self.position0, self.velocity, self.t_start, self.t_end, 1.0, -1.0).map_err(invalid)
    }
}

#[derive(Debug, Args)]
pub struct LightconeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Source worldline as trajectory JSON.
    #[arg(long, value_name = "FILE")]
    pub trajectory: Option<PathBuf>,
    /// Uniform source: position at t=0 (default 0,0,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub position0: Option<Vec3>,
    /// Uniform source: velocity (default 0.5,0,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub velocity: Option<Vec3>,
    /// Uniform source: domain start (default -100).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub t_start: Option<f64>,
    /// Uniform source: domain end (default 100).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub t_end: Option<f64>,
    /// Observer position (default 0,0,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub observer: Option<Vec3>,
    /// Observation time (default 1.5).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub t: Option<f64>,
}

pub fn run(args: LightconeArgs) -> Result<(), CliError> {
    let mut cfg: LightconeConfig = load(args.common.config.as_deref())?;
    apply!(cfg, args, trajectory, position0, velocity, t_start, t_end, observer, t);
    finite("t", cfg.t)?;
    if !cfg.observer.is_finite() {
        return Err(invalid("observer must be finite"));
    }
    let traj = cfg.source()?;
    let mut hits: Vec<Value> = Vec::new();
    let mut failure = None;
    for branch in [Branch::Retarded, Branch::Advanced] {
        match solve_lightcone(&traj, cfg.observer, cfg.t, branch) {
            Ok(hit) => {
                let mut v = serde_json::to_value(hit).expect("hits serialize");
                v["residual"] = json!(hit.residual());
                hits.push(v);
            }
            Err(e) => {
                failure = Some(format!("{} branch: {e}", branch.label()));
                break;
            }
        }
    }
    finish_json("lightcone", &cfg, json!({ "hits": hits }), args.common.out.as_deref(), failure)
}
