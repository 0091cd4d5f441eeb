use std::path::PathBuf;

use clap::Args;
use ndde_core::slit::{
    bragg_directions, closest_approach_l, de_broglie_length, SlitConfig, HBAR, PROTON_ELECTRON_MASS_RATIO,
};
use ndde_core::Vec3;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{apply, load};
use crate::output::{finish_json, Cell, Table};
use crate::values::parse_scalar;
use crate::{invalid, CliError, CommonArgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSlitConfig {
    /// Slit separation.
    pub a: f64,
    /// Incoming speed of the scattered charge.
    pub v3: f64,
    /// Proton to electron mass ratio.
    pub mass_ratio: f64,
    /// Largest Bragg order reported.
    pub n_max: u32,
    /// Mass of the scattered charge in electron masses.
    pub m_scattered: f64,
    /// Optional CSV file for the Bragg table.
    pub bragg_csv: Option<PathBuf>,
}

impl Default for DoubleSlitConfig {
    fn default() -> Self {
        DoubleSlitConfig {
            a: 1e5,
            v3: 0.01,
            mass_ratio: PROTON_ELECTRON_MASS_RATIO,
            n_max: 5,
            m_scattered: 1.0,
            bragg_csv: None,
        }
    }
}

impl DoubleSlitConfig {
    pub fn slit(&self) -> SlitConfig {
        SlitConfig {
            a: self.a,
            v3: self.v3,
            mass_ratio: self.mass_ratio,
            m_scattered: self.m_scattered,
            hbar: HBAR,
            ..SlitConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct DoubleSlitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Slit separation (default 1e5).
    #[arg(long, value_parser = parse_scalar)]
    pub a: Option<f64>,
    /// Incoming speed (default 0.01).
    #[arg(long, value_parser = parse_scalar)]
    pub v3: Option<f64>,
    /// Proton/electron mass ratio (default 1836.15267).
    #[arg(long, value_parser = parse_scalar)]
    pub mass_ratio: Option<f64>,
    /// Largest Bragg order (default 5).
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Scattered mass in electron masses (default 1).
    #[arg(long, value_parser = parse_scalar)]
    pub m_scattered: Option<f64>,
    /// Also write the Bragg table as CSV.
    #[arg(long, value_name = "FILE")]
    pub bragg_csv: Option<PathBuf>,
}

pub fn run(args: DoubleSlitArgs) -> Result<(), CliError> {
    let mut cfg: DoubleSlitConfig = load(args.common.config.as_deref())?;
    apply!(cfg, args, a, v3, mass_ratio, n_max, m_scattered, bragg_csv);
    let slit = cfg.slit();
    slit.validate().map_err(invalid)?;
    let est = de_broglie_length(&slit).map_err(invalid)?;
    // The bound partner moves along the line of sight with c/(c - n·v) equal
    // to the recoil factor.
    let n = Vec3::X;
    let v1 = n * (1.0 - 1.0 / est.recoil_factor);
    let l = closest_approach_l(&slit, v1, n).map_err(invalid)?;
    let bragg = bragg_directions(cfg.a, l, cfg.n_max).map_err(invalid)?;
    if let Some(path) = &cfg.bragg_csv {
        let mut table = Table::new("doubleslit", &cfg, &["n", "theta_rad", "theta_deg"]);
        for b in &bragg {
            table.push(vec![Cell::Int(b.n as i64), Cell::Float(b.theta), Cell::Float(b.theta_deg)]);
        }
        table.finish(crate::Format::Csv, Some(path), None)?;
    }
    let body = json!({
        "L": l,
        "recoil_factor": est.recoil_factor,
        "lambda_db": est.lambda_db,
        "ratio_to_h_over_mv": est.ratio_to_h_over_mv,
        "bragg": bragg.iter().map(|b| json!({ "n": b.n, "theta_deg": b.theta_deg })).collect::<Vec<_>>(),
    });
    finish_json("doubleslit", &cfg, body, args.common.out.as_deref(), None)
}
