use std::f64::consts::TAU;

use clap::Args;
use ndde_core::crystal::{
    integrate, momentum_kick, vonlaue_check, vonlaue_shift, CrystalError, FourierPotential, FourierTerm, Lattice,
    PhaseSample,
};
use ndde_core::Vec3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{apply, finite, load, positive};
use crate::output::{finish_json, Cell, Format, Table};
use crate::values::{parse_complex, parse_scalar, parse_vec3};
use crate::{invalid, CliError, CommonArgs, WORKERS_ENV};

/// One `±G` pair: `V_G = v[0] + i v[1]` and `V_{-G}` its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub g: Vec3,
    pub v: [f64; 2],
}

fn default_pairs() -> Vec<PairConfig> {
    vec![PairConfig { g: Vec3::new(TAU, 0.0, 0.0), v: [0.5, 0.0] }]
}

fn potential(epsilon: f64, pairs: &[PairConfig]) -> Result<FourierPotential, CliError> {
    if pairs.is_empty() {
        return Err(invalid("at least one Fourier pair is required"));
    }
    let mut terms = Vec::new();
    for p in pairs {
        if !(p.g.is_finite() && p.v.iter().all(|x| x.is_finite())) || p.g.norm() == 0.0 {
            return Err(invalid(format!("bad Fourier pair {p:?}")));
        }
        let v = Complex64::new(p.v[0], p.v[1]);
        terms.push(FourierTerm { g: p.g, v });
        terms.push(FourierTerm { g: -p.g, v: v.conj() });
    }
    FourierPotential::new(epsilon, terms).map_err(invalid)
}

/// Flags replacing the configured potential by a single pair.
#[derive(Debug, Args)]
pub struct PairArgs {
    /// Strength ε (default 0.01).
    #[arg(long, value_parser = parse_scalar)]
    pub epsilon: Option<f64>,
    /// Reciprocal vector of a single pair, e.g. 2pi,0 (default 2pi,0,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub g: Option<Vec3>,
    /// Coefficient V_G of that pair as re[,im] (default 0.5).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub v: Option<[f64; 2]>,
}

impl PairArgs {
    fn apply(&self, epsilon: &mut f64, pairs: &mut Vec<PairConfig>) {
        if let Some(e) = self.epsilon {
            *epsilon = e;
        }
        if self.g.is_some() || self.v.is_some() {
            let base = pairs.first().copied().unwrap_or(default_pairs()[0]);
            *pairs = vec![PairConfig { g: self.g.unwrap_or(base.g), v: self.v.unwrap_or(base.v) }];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrystalRunConfig {
    pub epsilon: f64,
    pub pairs: Vec<PairConfig>,
    pub x0: Vec3,
    pub p0: Vec3,
    pub t_end: f64,
    /// Step; by default the fastest potential period over `steps_per_period`.
    pub dt: Option<f64>,
    pub steps_per_period: f64,
    pub sample_every: usize,
    pub format: Format,
}

impl Default for CrystalRunConfig {
    fn default() -> Self {
        CrystalRunConfig {
            epsilon: 0.01,
            pairs: default_pairs(),
            x0: Vec3::new(0.4, 0.1, 0.0),
            p0: Vec3::new(0.0, 0.3, 0.0),
            t_end: 200.0,
            dt: None,
            steps_per_period: 200.0,
            sample_every: 10,
            format: Format::Csv,
        }
    }
}

fn step_for(pot: &FourierPotential, p0: Vec3, per_period: f64, t_end: f64) -> f64 {
    pot.default_step(p0, per_period).unwrap_or(t_end / per_period).min(t_end)
}

#[derive(Debug, Args)]
pub struct HamiltonianArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub pair: PairArgs,
    /// Initial position (default 0.4,0.1,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub x0: Option<Vec3>,
    /// Initial momentum (default 0,0.3,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub p0: Option<Vec3>,
    /// Run length (default 200).
    #[arg(long, value_parser = parse_scalar)]
    pub t_end: Option<f64>,
    /// Fixed step; overrides steps-per-period.
    #[arg(long, value_parser = parse_scalar)]
    pub dt: Option<f64>,
    /// Steps per fastest potential period (default 200).
    #[arg(long, value_parser = parse_scalar)]
    pub steps_per_period: Option<f64>,
    /// Keep every n-th step (default 10).
    #[arg(long)]
    pub sample_every: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn sample_row(s: &PhaseSample) -> Vec<Cell> {
    [s.t, s.x.x, s.x.y, s.p.x, s.p.y, s.h].into_iter().map(Cell::Float).collect()
}

pub fn run_hamiltonian(args: HamiltonianArgs) -> Result<(), CliError> {
    let mut cfg: CrystalRunConfig = load(args.common.config.as_deref())?;
    args.pair.apply(&mut cfg.epsilon, &mut cfg.pairs);
    apply!(cfg, args, x0, p0, t_end, dt, steps_per_period, sample_every, format);
    let pot = potential(cfg.epsilon, &cfg.pairs)?;
    positive("t_end", cfg.t_end)?;
    positive("steps_per_period", cfg.steps_per_period)?;
    if !(cfg.x0.is_finite() && cfg.p0.is_finite()) {
        return Err(invalid("x0 and p0 must be finite"));
    }
    if cfg.sample_every == 0 {
        return Err(invalid("sample_every must be at least 1"));
    }
    let dt = cfg.dt.unwrap_or_else(|| step_for(&pot, cfg.p0, cfg.steps_per_period, cfg.t_end));
    positive("dt", dt)?;
    if cfg.t_end / dt > 1e9 {
        return Err(invalid("more than 1e9 steps requested"));
    }
    cfg.dt = Some(dt);
    let mut table = Table::new("crystal hamiltonian", &cfg, &["t", "x", "y", "px", "py", "H"]);
    match integrate(&pot, cfg.x0, cfg.p0, cfg.t_end, dt, cfg.sample_every) {
        Ok(run) => {
            run.samples.iter().for_each(|s| table.push(sample_row(s)));
            table.finish(cfg.format, args.common.out.as_deref(), None)
        }
        Err(CrystalError::NonFinite { last_good }) => {
            table.push(sample_row(&last_good));
            table.finish(cfg.format, args.common.out.as_deref(), Some(format!("state became non-finite after t={}", last_good.t)))
        }
        Err(e) => Err(invalid(e)),
    }
}

/// Ensemble of runs; job `i` draws its initial data from a ChaCha stream
/// seeded with `seed + i`, so results do not depend on the worker count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KickSweepConfig {
    pub epsilon: f64,
    pub pairs: Vec<PairConfig>,
    pub runs: usize,
    pub seed: u64,
    /// Initial speeds are uniform in `[p_min, p_max]`, directions uniform in the plane.
    pub p_min: f64,
    pub p_max: f64,
    /// Initial positions are uniform in `[0, cell)²`.
    pub cell: f64,
    pub t_end: f64,
    pub steps_per_period: f64,
    pub format: Format,
}

impl Default for KickSweepConfig {
    fn default() -> Self {
        KickSweepConfig {
            epsilon: 0.01,
            pairs: default_pairs(),
            runs: 64,
            seed: 0,
            p_min: 0.0,
            p_max: 1.0,
            cell: 1.0,
            t_end: 100.0,
            steps_per_period: 100.0,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct KickSweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub pair: PairArgs,
    /// Number of runs (default 64).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Smallest initial speed (default 0).
    #[arg(long, value_parser = parse_scalar)]
    pub p_min: Option<f64>,
    /// Largest initial speed (default 1).
    #[arg(long, value_parser = parse_scalar)]
    pub p_max: Option<f64>,
    /// Side of the square of initial positions (default 1).
    #[arg(long, value_parser = parse_scalar)]
    pub cell: Option<f64>,
    /// Run length (default 100).
    #[arg(long, value_parser = parse_scalar)]
    pub t_end: Option<f64>,
    /// Steps per fastest potential period (default 100).
    #[arg(long, value_parser = parse_scalar)]
    pub steps_per_period: Option<f64>,
    /// Worker threads; default $NDDE_NUM_WORKERS, else the number of CPUs.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Flag, then environment, then the number of processors.
pub fn worker_count(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match (flag, std::env::var(WORKERS_ENV)) {
        (Some(n), _) => n,
        (None, Ok(s)) => s.trim().parse().map_err(|_| invalid(format!("{WORKERS_ENV}='{s}' is not a count")))?,
        (None, Err(_)) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if n == 0 {
        return Err(invalid("worker count must be at least 1"));
    }
    Ok(n)
}

const KICK_COLUMNS: [&str; 12] =
    ["job", "x0", "y0", "px0", "py0", "dpx", "dpy", "dp", "alignment", "bound", "estimate_x", "estimate_y"];

fn kick_job(cfg: &KickSweepConfig, pot: &FourierPotential, job: usize) -> Result<Vec<Cell>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(job as u64));
    let x0 = Vec3::new(rng.gen_range(0.0..1.0) * cfg.cell, rng.gen_range(0.0..1.0) * cfg.cell, 0.0);
    let angle: f64 = rng.gen_range(0.0..TAU);
    let speed = cfg.p_min + (cfg.p_max - cfg.p_min) * rng.gen_range(0.0..1.0);
    let p0 = Vec3::new(angle.cos(), angle.sin(), 0.0) * speed;
    let dt = step_for(pot, p0, cfg.steps_per_period, cfg.t_end);
    let run = integrate(pot, x0, p0, cfg.t_end, dt, usize::MAX).map_err(|e| format!("job {job}: {e}"))?;
    let k = momentum_kick(&run, pot).map_err(|e| format!("job {job}: {e}"))?;
    let mut row = vec![Cell::Int(job as i64)];
    row.extend([x0.x, x0.y, p0.x, p0.y, k.delta_p.x, k.delta_p.y, k.delta_p.norm()].map(Cell::Float));
    row.push(k.alignment.into());
    row.extend([k.separatrix_bound, k.estimate.x, k.estimate.y].map(Cell::Float));
    Ok(row)
}

pub fn run_kick_sweep(args: KickSweepArgs) -> Result<(), CliError> {
    let mut cfg: KickSweepConfig = load(args.common.config.as_deref())?;
    args.pair.apply(&mut cfg.epsilon, &mut cfg.pairs);
    apply!(cfg, args, runs, seed, p_min, p_max, cell, t_end, steps_per_period, format);
    let pot = potential(cfg.epsilon, &cfg.pairs)?;
    positive("t_end", cfg.t_end)?;
    positive("cell", cfg.cell)?;
    positive("steps_per_period", cfg.steps_per_period)?;
    finite("p_min", cfg.p_min)?;
    finite("p_max", cfg.p_max)?;
    if !(0.0 <= cfg.p_min && cfg.p_min <= cfg.p_max) {
        return Err(invalid("need 0 <= p_min <= p_max"));
    }
    let workers = worker_count(args.workers)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let results: Vec<Result<Vec<Cell>, String>> =
        pool.install(|| (0..cfg.runs).into_par_iter().map(|job| kick_job(&cfg, &pot, job)).collect());

    let mut table = Table::new("crystal kick-sweep", &cfg, &KICK_COLUMNS);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => table.push(row),
            Err(e) => failures.push(e),
        }
    }
    let failure = (!failures.is_empty()).then(|| failures.join("; "));
    table.finish(cfg.format, args.common.out.as_deref(), failure)
}

/// Velocity change per reciprocal vector; `g` empty means every reciprocal
/// vector of the lattice up to `max_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VonLaueConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub u: Vec3,
    pub g: Vec<Vec3>,
    pub a1: Vec3,
    pub a2: Vec3,
    pub max_index: i64,
    /// Sites per side of the lattice patch used for the delay check.
    pub patch: usize,
}

impl Default for VonLaueConfig {
    fn default() -> Self {
        VonLaueConfig { l: 1.0, u: Vec3::X, g: Vec::new(), a1: Vec3::X, a2: Vec3::Y, max_index: 1, patch: 20 }
    }
}

#[derive(Debug, Args)]
pub struct VonLaueArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Delay period L (default 1).
    #[arg(long = "L", value_parser = parse_scalar)]
    pub l: Option<f64>,
    /// Scattered velocity (default 1,0,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub u: Option<Vec3>,
    /// Reciprocal vector, repeatable (default: all lattice vectors up to max-index).
    #[arg(long = "G", allow_hyphen_values = true, value_parser = parse_vec3)]
    pub g: Vec<Vec3>,
    /// First lattice basis vector (default 1,0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub a1: Option<Vec3>,
    /// Second lattice basis vector (default 0,1).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub a2: Option<Vec3>,
    /// Largest reciprocal index enumerated (default 1).
    #[arg(long)]
    pub max_index: Option<i64>,
    /// Sites per side of the checked patch (default 20).
    #[arg(long)]
    pub patch: Option<usize>,
}

pub fn run_vonlaue(args: VonLaueArgs) -> Result<(), CliError> {
    let mut cfg: VonLaueConfig = load(args.common.config.as_deref())?;
    apply!(cfg, args, l, u, a1, a2, max_index, patch);
    if !args.g.is_empty() {
        cfg.g = args.g.clone();
    }
    positive("L", cfg.l)?;
    if !(cfg.u.is_finite() && cfg.u.norm() > 0.0) {
        return Err(invalid("u must be finite and non-zero"));
    }
    if cfg.g.iter().any(|g| !g.is_finite()) {
        return Err(invalid("G must be finite"));
    }
    if !(0..=50).contains(&cfg.max_index) || !(1..=1000).contains(&cfg.patch) {
        return Err(invalid("need 0 <= max_index <= 50 and 1 <= patch <= 1000"));
    }
    let lattice = Lattice::new_2d(cfg.a1, cfg.a2).map_err(invalid)?;
    let gs = if cfg.g.is_empty() { lattice.reciprocal_vectors(cfg.max_index) } else { cfg.g.clone() };
    let mut rows = Vec::new();
    for g in gs {
        let du = vonlaue_shift(cfg.l, cfg.u, g);
        let check = vonlaue_check(&lattice, cfg.l, cfg.u, du, cfg.patch).map_err(invalid)?;
        rows.push(json!({ "G": g, "delta_u": du, "lattice_max_error": check.max_error, "sites": check.sites }));
    }
    let body = json!({
        "lattice": { "basis": lattice.basis(), "reciprocal": lattice.reciprocal() },
        "rows": rows,
    });
    finish_json("crystal vonlaue", &cfg, body, args.common.out.as_deref(), None)
}
