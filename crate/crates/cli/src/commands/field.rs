use std::path::PathBuf;

use clap::Args;
use ndde_core::farfield::far_fields_pm;
use ndde_core::lightcone::Branch;
use ndde_core::sewing::{bound_orbit, OrbitShape};
use ndde_core::{PiecewiseTrajectory, Vec3};
use serde::{Deserialize, Serialize};

use super::{apply, finite, load, load_trajectory, positive};
use crate::output::{Cell, Format, Table};
use crate::values::{parse_scalar, parse_vec3};
use crate::{invalid, CliError, CommonArgs};

const COLUMNS: [&str; 16] = [
    "t", "x", "y", "z", "ret_Ex", "ret_Ey", "ret_Ez", "ret_Bx", "ret_By", "ret_Bz", "adv_Ex", "adv_Ey", "adv_Ez",
    "adv_Bx", "adv_By", "adv_Bz",
];

/// Probe of both far-field branches at a fixed observer. Without a
/// trajectory file the source is a circular orbit about the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldProbeConfig {
    pub trajectory: Option<PathBuf>,
    pub radius: f64,
    pub period: f64,
    pub orbit_t_start: f64,
    pub orbit_t_end: f64,
    pub observer: Vec3,
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
    pub format: Format,
}

impl Default for FieldProbeConfig {
    fn default() -> Self {
        FieldProbeConfig {
            trajectory: None,
            radius: 1.0,
            period: 20.0,
            orbit_t_start: -200.0,
            orbit_t_end: 200.0,
            observer: Vec3::new(10.0, 0.0, 0.0),
            t0: 0.0,
            t1: 20.0,
            samples: 201,
            format: Format::Csv,
        }
    }
}

impl FieldProbeConfig {
    fn validate(&self) -> Result<(), CliError> {
        finite("t0", self.t0)?;
        finite("t1", self.t1)?;
        if self.t1 < self.t0 {
            return Err(invalid("t1 must not precede t0"));
        }
        if self.samples == 0 || self.samples > 10_000_000 {
            return Err(invalid("samples must be in 1..=1e7"));
        }
        if !self.observer.is_finite() {
            return Err(invalid("observer must be finite"));
        }
        if self.trajectory.is_none() {
            positive("radius", self.radius)?;
            positive("period", self.period)?;
        }
        Ok(())
    }

    fn source(&self) -> Result<PiecewiseTrajectory, CliError> {
        match &self.trajectory {
            Some(p) => load_trajectory(p),
            None => bound_orbit(OrbitShape::Circular, Vec3::ZERO, self.radius, self.period, self.orbit_t_start, self.orbit_t_end)
                .map_err(invalid),
        }
    }
}

#[derive(Debug, Args)]
pub struct FieldProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Source worldline as trajectory JSON.
    #[arg(long, value_name = "FILE")]
    pub trajectory: Option<PathBuf>,
    /// Built-in circular orbit radius (default 1).
    #[arg(long, value_parser = parse_scalar)]
    pub radius: Option<f64>,
    /// Built-in circular orbit period (default 20).
    #[arg(long, value_parser = parse_scalar)]
    pub period: Option<f64>,
    /// Built-in orbit domain start (default -200).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub orbit_t_start: Option<f64>,
    /// Built-in orbit domain end (default 200).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub orbit_t_end: Option<f64>,
    /// Observer position (default 10,0,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub observer: Option<Vec3>,
    /// First probe time (default 0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub t0: Option<f64>,
    /// Last probe time (default 20).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub t1: Option<f64>,
    /// Number of equally spaced probe times (default 201).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

pub fn run(args: FieldProbeArgs) -> Result<(), CliError> {
    let mut cfg: FieldProbeConfig = load(args.common.config.as_deref())?;
    apply!(cfg, args, trajectory, radius, period, orbit_t_start, orbit_t_end, observer, t0, t1, samples, format);
    cfg.validate()?;
    let traj = cfg.source()?;
    let mut table = Table::new("field-probe", &cfg, &COLUMNS);
    let mut failure = None;
    for i in 0..cfg.samples {
        let t = if cfg.samples == 1 { cfg.t0 } else { cfg.t0 + (cfg.t1 - cfg.t0) * i as f64 / (cfg.samples - 1) as f64 };
        let x = cfg.observer;
        let mut row: Vec<Cell> = [t, x.x, x.y, x.z].into_iter().map(Cell::Float).collect();
        let fields = [Branch::Retarded, Branch::Advanced].map(|b| far_fields_pm(&traj, x, t, b));
        match fields {
            [Ok(ret), Ok(adv)] => {
                for f in [ret, adv] {
                    row.extend(f.e.to_array().into_iter().chain(f.b.to_array()).map(Cell::Float));
                }
                table.push(row);
            }
            [Err(e), _] | [_, Err(e)] => {
                failure = Some(format!("t={t}: {e}"));
                break;
            }
        }
    }
    table.finish(cfg.format, args.common.out.as_deref(), failure)
}
