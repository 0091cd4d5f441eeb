use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ndde_core::sewing::{
    central_approach, head_on_approach, propagate_chain, static_pair, DiscontinuityEvent, SewingError,
};
use ndde_core::PiecewiseTrajectory;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{apply, finite, load, positive};
use crate::output::{Cell, Format, Table};
use crate::values::parse_scalar;
use crate::{invalid, CliError, CommonArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Two charges at rest `r` apart.
    #[default]
    Static,
    /// A charge approaching a resting one at constant speed.
    HeadOn,
    /// A charge braking to rest midway between two sites `a` apart.
    Central,
    /// Worldlines read from `trajectories` (a JSON array of trajectories).
    File,
}

/// Chain geometry. `horizon` and `partner` default per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SewingConfig {
    pub scenario: Scenario,
    pub trajectories: Option<PathBuf>,
    pub r: f64,
    pub d0: f64,
    pub speed: f64,
    pub a: f64,
    pub horizon: Option<f64>,
    pub steps: usize,
    pub source_trajectory: usize,
    pub source_t: f64,
    pub partner: Option<usize>,
    pub format: Format,
}

impl Default for SewingConfig {
    fn default() -> Self {
        SewingConfig {
            scenario: Scenario::Static,
            trajectories: None,
            r: 3.0,
            d0: 40.0,
            speed: 0.1,
            a: 2.0,
            horizon: None,
            steps: 50,
            source_trajectory: 0,
            source_t: 0.0,
            partner: None,
            format: Format::Csv,
        }
    }
}

impl SewingConfig {
    pub fn resolved(mut self) -> Self {
        let (horizon, partner) = match self.scenario {
            Scenario::Static => (self.r * (self.steps as f64 + 2.0), 1),
            Scenario::HeadOn => (0.95 * self.d0 / self.speed, 1),
            Scenario::Central => (self.d0 / self.speed + 2.0 * self.a / self.speed + 1000.0, 2),
            Scenario::File => (0.0, 1),
        };
        if self.scenario != Scenario::File {
            self.horizon.get_or_insert(horizon);
        }
        self.partner.get_or_insert(partner);
        self
    }

    fn validate(&self) -> Result<(), CliError> {
        finite("source_t", self.source_t)?;
        if self.steps > 1_000_000 {
            return Err(invalid("steps must be at most 1e6"));
        }
        match self.scenario {
            Scenario::Static => positive("r", self.r)?,
            Scenario::HeadOn => {
                positive("d0", self.d0)?;
                positive("speed", self.speed)?;
            }
            Scenario::Central => {
                positive("a", self.a)?;
                positive("d0", self.d0)?;
                positive("speed", self.speed)?;
            }
            Scenario::File if self.trajectories.is_none() => {
                return Err(invalid("scenario 'file' needs trajectories"));
            }
            Scenario::File => {}
        }
        if let Some(h) = self.horizon {
            positive("horizon", h)?;
        }
        Ok(())
    }

    fn worldlines(&self) -> Result<Vec<PiecewiseTrajectory>, CliError> {
        let h = self.horizon.unwrap_or_default();
        let built = match self.scenario {
            Scenario::Static => static_pair(self.r, self.source_t.min(0.0) - self.r, h),
            Scenario::HeadOn => head_on_approach(self.d0, self.speed, h),
            Scenario::Central => central_approach(self.a, self.d0, self.speed, h),
            Scenario::File => {
                let path = self.trajectories.as_ref().expect("validated");
                let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                let raw: Vec<serde_json::Value> =
                    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                return raw
                    .iter()
                    .map(|v| PiecewiseTrajectory::from_json(&v.to_string()).map_err(invalid))
                    .collect();
            }
        };
        built.map_err(invalid)
    }
}

#[derive(Debug, Args)]
pub struct SewingArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    /// JSON array of trajectories (scenario 'file').
    #[arg(long, value_name = "FILE")]
    pub trajectories: Option<PathBuf>,
    /// Static pair separation (default 3).
    #[arg(long, value_parser = parse_scalar)]
    pub r: Option<f64>,
    /// Initial distance of the moving charge (default 40).
    #[arg(long, value_parser = parse_scalar)]
    pub d0: Option<f64>,
    /// Speed of the moving charge (default 0.1).
    #[arg(long, value_parser = parse_scalar)]
    pub speed: Option<f64>,
    /// Site separation of the central approach (default 2).
    #[arg(long, value_parser = parse_scalar)]
    pub a: Option<f64>,
    /// End of the worldlines.
    #[arg(long, value_parser = parse_scalar)]
    pub horizon: Option<f64>,
    /// Number of hops (default 50).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Index of the worldline carrying the initial discontinuity (default 0).
    #[arg(long)]
    pub source_trajectory: Option<usize>,
    /// Time of the initial discontinuity (default 0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub source_t: Option<f64>,
    /// Index of the partner worldline.
    #[arg(long)]
    pub partner: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

pub fn run(args: SewingArgs) -> Result<(), CliError> {
    let mut cfg: SewingConfig = load(args.common.config.as_deref())?;
    apply!(cfg, args, scenario, trajectories, r, d0, speed, a, horizon, steps, source_trajectory, source_t, partner, format);
    let cfg = cfg.resolved();
    cfg.validate()?;
    let trajs = cfg.worldlines()?;
    let source = DiscontinuityEvent::source(cfg.source_trajectory, cfg.source_t);
    let mut table = Table::new("sewing", &cfg, &["generation", "trajectory_id", "t"]);
    let chain = match propagate_chain(&trajs, source, cfg.partner.unwrap_or(1), cfg.steps) {
        Ok(c) => c,
        Err(SewingError::Lightcone(e)) => return table.finish(cfg.format, args.common.out.as_deref(), Some(e.to_string())),
        Err(e) => return Err(invalid(e)),
    };
    table.extra("truncated", json!(chain.truncated));
    table.extra("max_residual", json!(chain.max_residual()));
    for e in &chain.events {
        table.push(vec![Cell::Int(e.generation as i64), Cell::Int(e.trajectory as i64), Cell::Float(e.t)]);
    }
    table.finish(cfg.format, args.common.out.as_deref(), None)
}
