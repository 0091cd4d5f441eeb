use clap::{Args, ValueEnum};
use ndde_core::delay::{solve, DelayError, ScalarDelayProblem, ScalarSolution};
use ndde_core::HistoryFunction;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{apply, load, positive};
use crate::output::{Cell, Format, Table};
use crate::values::parse_scalar;
use crate::{invalid, CliError, CommonArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayKindArg {
    /// y'(t) = a·y(t - delay)
    Retarded,
    /// y'(t) = a·y'(t - delay)
    #[default]
    Neutral,
}

/// Linear test equations. History defaults: `y ≡ 1` (retarded), `y = t` (neutral).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NddeConfig {
    pub kind: DelayKindArg,
    /// Coefficient; default -1 (retarded) or 0.5 (neutral).
    pub a: Option<f64>,
    /// History `y(t) = history_value + history_slope * t` for `t <= 0`.
    pub history_value: Option<f64>,
    pub history_slope: Option<f64>,
    pub delay: f64,
    pub horizon: f64,
    pub steps_per_delay: usize,
    pub format: Format,
}

impl Default for NddeConfig {
    fn default() -> Self {
        NddeConfig {
            kind: DelayKindArg::Neutral,
            a: None,
            history_value: None,
            history_slope: None,
            delay: 1.0,
            horizon: 5.0,
            steps_per_delay: 200,
            format: Format::Csv,
        }
    }
}

impl NddeConfig {
    /// Fills kind-dependent defaults.
    pub fn resolved(mut self) -> Self {
        let (a, c, s) = match self.kind {
            DelayKindArg::Retarded => (-1.0, 1.0, 0.0),
            DelayKindArg::Neutral => (0.5, 0.0, 1.0),
        };
        self.a.get_or_insert(a);
        self.history_value.get_or_insert(c);
        self.history_slope.get_or_insert(s);
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("delay", self.delay)?;
        positive("horizon", self.horizon)?;
        for (name, v) in [("a", self.a), ("history_value", self.history_value), ("history_slope", self.history_slope)] {
            if !v.is_some_and(f64::is_finite) {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        if self.steps_per_delay == 0 {
            return Err(invalid("steps_per_delay must be at least 1"));
        }
        if self.horizon / self.delay * self.steps_per_delay as f64 > 1e8 {
            return Err(invalid("more than 1e8 steps requested"));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<ScalarDelayProblem, CliError> {
        let a = self.a.unwrap_or_default();
        let (c, s) = (self.history_value.unwrap_or_default(), self.history_slope.unwrap_or_default());
        let history = HistoryFunction::linear(-self.delay, s, c).map_err(invalid)?;
        let p = match self.kind {
            DelayKindArg::Retarded => ScalarDelayProblem::retarded(move |_, yd| a * yd, history, self.delay, self.horizon),
            DelayKindArg::Neutral => ScalarDelayProblem::neutral(move |_, _, d| a * d, history, self.delay, self.horizon),
        };
        p.and_then(|p| p.with_steps_per_delay(self.steps_per_delay)).map_err(invalid)
    }
}

#[derive(Debug, Args)]
pub struct NddeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub kind: Option<DelayKindArg>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub history_value: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    pub history_slope: Option<f64>,
    /// Delay length (default 1).
    #[arg(long, value_parser = parse_scalar)]
    pub delay: Option<f64>,
    /// End of the integration interval (default 5).
    #[arg(long, value_parser = parse_scalar)]
    pub horizon: Option<f64>,
    /// RK4 steps per delay (default 200).
    #[arg(long)]
    pub steps_per_delay: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn table(cfg: &NddeConfig, sol: &ScalarSolution) -> Table {
    let mut t = Table::new("ndde", cfg, &["t", "y", "ydot_left", "ydot_right"]);
    let bps: Vec<_> = sol.breaking_points().iter().map(|b| json!({ "t": b.t, "jumps": b.jumps })).collect();
    t.extra("breaking_points", json!(bps));
    for n in sol.nodes() {
        t.push(vec![Cell::Float(n.t), Cell::Float(n.y), Cell::Float(n.ydot_left), Cell::Float(n.ydot_right)]);
    }
    t
}

pub fn run(args: NddeArgs) -> Result<(), CliError> {
    let mut cfg: NddeConfig = load(args.common.config.as_deref())?;
    apply!(cfg, args, kind, a, history_value, history_slope, delay, horizon, steps_per_delay, format);
    let cfg = cfg.resolved();
    cfg.validate()?;
    let problem = cfg.problem()?;
    let out = args.common.out.as_deref();
    match solve(&problem) {
        Ok(sol) => table(&cfg, &sol).finish(cfg.format, out, None),
        Err(DelayError::IntegrationFailure { last_good_t, partial }) => {
            table(&cfg, &partial).finish(cfg.format, out, Some(format!("non-finite state after t={last_good_t}")))
        }
        Err(e) => {
            Table::new("ndde", &cfg, &["t", "y", "ydot_left", "ydot_right"]).finish(cfg.format, out, Some(e.to_string()))
        }
    }
}
