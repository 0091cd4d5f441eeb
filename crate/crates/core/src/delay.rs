//! Method of steps for scalar constant-delay equations.
//!
//! Two problem kinds are supported:
//!
//! * retarded: `y'(t) = F(y(t), y(t - tau))`
//! * neutral:  `y'(t) = G(y(t), y(t - tau), y'(t - tau))`
//!
//! The solver takes classical RK4 steps on a grid with an integer number of
//! steps per delay, so no step ever straddles a breaking point `n * tau`.
//! Delayed values come from the cubic Hermite interpolant of the step that
//! lies exactly one delay in the past (or from the history for `t < tau`),
//! which keeps every delayed lookup one-sided in the right way.
//!
//! Derivative jumps at breaking points are measured from one-sided data:
//! order 1 directly from the stored left/right slopes, orders 2..=4 from the
//! derivatives of interpolating polynomials fitted to nodes on a single side.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::trajectory::{HistoryFunction, Side, Smoothness};

/// Default number of RK4 steps per delay interval.
pub const DEFAULT_STEPS_PER_DELAY: usize = 200;

/// Degree of the one-sided interpolants used for orders 2..=4.
const JUMP_FIT_DEGREE: usize = 10;

/// Stencils span about `1 / JUMP_FIT_SPREAD` of the room on their side.
const JUMP_FIT_SPREAD: usize = 8;

/// Highest derivative order whose jump is measured.
pub const MAX_JUMP_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum DelayError {
    #[error("delay must be positive and finite, got {0}")]
    BadDelay(f64),
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("step size {0} invalid for delay")]
    BadStep(f64),
    #[error("history reaches back to {t_min} but the delay is {delay}")]
    ShortHistory { t_min: f64, delay: f64 },
    #[error("neutral equations need a C1 history")]
    NeedsC1History,
    #[error("right-hand side returned a non-finite value after t={last_good_t}")]
    IntegrationFailure { last_good_t: f64, partial: Box<ScalarSolution> },
    #[error("derivative order {0} outside 1..=4")]
    BadOrder(usize),
}

/// Retarded or neutral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayKind {
    Retarded,
    Neutral,
}

type RetardedFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type NeutralFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Right-hand side, with the arity fixed by the kind.
#[derive(Clone)]
pub enum DelayRhs {
    /// `F(y, y_delayed)`
    Retarded(RetardedFn),
    /// `G(y, y_delayed, ydot_delayed)`
    Neutral(NeutralFn),
}

impl DelayRhs {
    fn eval(&self, y: f64, yd: f64, ydot_d: f64) -> f64 {
        match self {
            DelayRhs::Retarded(f) => f(y, yd),
            DelayRhs::Neutral(g) => g(y, yd, ydot_d),
        }
    }

    pub fn kind(&self) -> DelayKind {
        match self {
            DelayRhs::Retarded(_) => DelayKind::Retarded,
            DelayRhs::Neutral(_) => DelayKind::Neutral,
        }
    }
}

impl fmt::Debug for DelayRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DelayRhs::{:?}", self.kind())
    }
}

/// A scalar delay problem on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct ScalarDelayProblem {
    rhs: DelayRhs,
    delay: f64,
    history: HistoryFunction,
    horizon: f64,
    steps_per_delay: usize,
}

impl ScalarDelayProblem {
    pub fn new(
        rhs: DelayRhs,
        history: HistoryFunction,
        delay: f64,
        horizon: f64,
    ) -> Result<Self, DelayError> {
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(DelayError::BadDelay(delay));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(DelayError::BadHorizon(horizon));
        }
        if !history.covers(delay) {
            return Err(DelayError::ShortHistory { t_min: history.t_min(), delay });
        }
        if rhs.kind() == DelayKind::Neutral && history.smoothness() != Smoothness::C1 {
            return Err(DelayError::NeedsC1History);
        }
        Ok(ScalarDelayProblem {
            rhs,
            delay,
            history,
            horizon,
            steps_per_delay: DEFAULT_STEPS_PER_DELAY,
        })
    }

    /// `y' = f(y(t), y(t - delay))`.
    pub fn retarded(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        history: HistoryFunction,
        delay: f64,
        horizon: f64,
    ) -> Result<Self, DelayError> {
        Self::new(DelayRhs::Retarded(Arc::new(f)), history, delay, horizon)
    }

    /// `y' = g(y(t), y(t - delay), y'(t - delay))`.
    pub fn neutral(
        g: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        history: HistoryFunction,
        delay: f64,
        horizon: f64,
    ) -> Result<Self, DelayError> {
        Self::new(DelayRhs::Neutral(Arc::new(g)), history, delay, horizon)
    }

    /// Step size request; rounded so that a whole number of steps fits in one delay.
    pub fn with_step(mut self, step: f64) -> Result<Self, DelayError> {
        if !(step > 0.0 && step <= self.delay) {
            return Err(DelayError::BadStep(step));
        }
        self.steps_per_delay = (self.delay / step).round().max(1.0) as usize;
        Ok(self)
    }

    pub fn with_steps_per_delay(mut self, n: usize) -> Result<Self, DelayError> {
        if n == 0 {
            return Err(DelayError::BadStep(f64::INFINITY));
        }
        self.steps_per_delay = n;
        Ok(self)
    }

    pub fn kind(&self) -> DelayKind {
        self.rhs.kind()
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.delay / self.steps_per_delay as f64
    }

    pub fn history(&self) -> &HistoryFunction {
        &self.history
    }
}

/// Measured one-sided jumps at a breaking point `t = n * delay`.
///
/// `jumps[k - 1]` is `y^(k)(t+) - y^(k)(t-)`; `None` where the solution does
/// not extend far enough past `t` to measure.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakingPoint {
    pub index: usize,
    pub t: f64,
    pub jumps: [Option<f64>; MAX_JUMP_ORDER],
}

impl BreakingPoint {
    /// Lowest order whose jump exceeds `tolerances[order - 1]`.
    pub fn first_nonzero_order(&self, tolerances: &[f64; MAX_JUMP_ORDER]) -> Option<usize> {
        self.jumps
            .iter()
            .zip(tolerances)
            .position(|(j, tol)| j.is_some_and(|j| j.abs() > *tol))
            .map(|i| i + 1)
    }
}

/// Dense solution on `[0, horizon]` on a uniform grid aligned with the delay.
#[derive(Clone)]
pub struct ScalarSolution {
    problem: ScalarDelayProblem,
    h: f64,
    /// grid times, `t[k] = k * h` with breaking points hit exactly
    t: Vec<f64>,
    y: Vec<f64>,
    /// `y'(t_k-)`; entry 0 is the history slope (NaN for C0 history)
    d_left: Vec<f64>,
    /// `y'(t_k+)`
    d_right: Vec<f64>,
    breaking_points: Vec<BreakingPoint>,
}

impl fmt::Debug for ScalarSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarSolution")
            .field("kind", &self.problem.kind())
            .field("steps", &self.t.len().saturating_sub(1))
            .field("t_end", &self.t.last())
            .finish()
    }
}

/// One grid node of the solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub y: f64,
    pub ydot_left: f64,
    pub ydot_right: f64,
}

/// Value and slope of a past point, as seen by the step being taken.
#[derive(Clone, Copy)]
struct Delayed {
    y: f64,
    ydot: f64,
}

fn hermite_mid(y0: f64, d0: f64, y1: f64, d1: f64, h: f64) -> Delayed {
    Delayed {
        y: 0.5 * (y0 + y1) + h * (d0 - d1) / 8.0,
        ydot: 1.5 * (y1 - y0) / h - 0.25 * (d0 + d1),
    }
}

/// Integrates `problem` from 0 to its horizon.
pub fn solve(problem: &ScalarDelayProblem) -> Result<ScalarSolution, DelayError> {
    let n = problem.steps_per_delay;
    let h = problem.step();
    let delay = problem.delay;
    let total = ((problem.horizon / h) - 1e-9).ceil().max(1.0) as usize;
    let grid_t = |k: usize| (k / n) as f64 * delay + (k % n) as f64 * h;

    let hist = &problem.history;
    let y0 = hist.value(0.0);
    let mut sol = ScalarSolution {
        problem: problem.clone(),
        h,
        t: Vec::with_capacity(total + 1),
        y: Vec::with_capacity(total + 1),
        d_left: Vec::with_capacity(total + 1),
        d_right: Vec::with_capacity(total + 1),
        breaking_points: Vec::new(),
    };
    sol.t.push(0.0);
    sol.y.push(y0);
    sol.d_left.push(hist.derivative(0.0).unwrap_or(f64::NAN));

    // Past data for step k at fraction 0, 1/2, 1 of the step.
    let delayed = |sol: &ScalarSolution, k: usize| -> [Delayed; 3] {
        if k < n {
            let t0 = k as f64 * h - delay;
            let t1 = (k + 1) as f64 * h - delay;
            let tm = t0 + 0.5 * h;
            let at = |t: f64| Delayed {
                y: hist.value(t),
                ydot: hist.derivative(t).unwrap_or(f64::NAN),
            };
            // The step ending at t = delay sees the history at exactly 0.
            let end = if k + 1 == n { at(0.0) } else { at(t1) };
            [at(t0), at(tm), end]
        } else {
            let j = k - n;
            let (ya, yb) = (sol.y[j], sol.y[j + 1]);
            let (da, db) = (sol.d_right[j], sol.d_left[j + 1]);
            [
                Delayed { y: ya, ydot: da },
                hermite_mid(ya, da, yb, db, h),
                Delayed { y: yb, ydot: db },
            ]
        }
    };

    let rhs = &problem.rhs;
    for k in 0..total {
        let [p0, pm, p1] = delayed(&sol, k);
        let yk = sol.y[k];
        let k1 = rhs.eval(yk, p0.y, p0.ydot);
        let k2 = rhs.eval(yk + 0.5 * h * k1, pm.y, pm.ydot);
        let k3 = rhs.eval(yk + 0.5 * h * k2, pm.y, pm.ydot);
        let k4 = rhs.eval(yk + h * k3, p1.y, p1.ydot);
        let y_next = yk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let d_next = rhs.eval(y_next, p1.y, p1.ydot);
        if ![k1, k2, k3, k4, y_next, d_next].iter().all(|v| v.is_finite()) {
            let last_good_t = sol.t[k];
            sol.d_right.push(f64::NAN);
            sol.finish();
            return Err(DelayError::IntegrationFailure { last_good_t, partial: Box::new(sol) });
        }
        sol.d_right.push(k1);
        sol.t.push(grid_t(k + 1));
        sol.y.push(y_next);
        sol.d_left.push(d_next);
    }
    // Right slope at the final node, from the past data one delay back.
    let last = total;
    let right_end = if last < n {
        let t = last as f64 * h - delay;
        rhs.eval(sol.y[last], hist.value(t), hist.derivative(t).unwrap_or(f64::NAN))
    } else {
        let j = last - n;
        rhs.eval(sol.y[last], sol.y[j], sol.d_right[j])
    };
    sol.d_right.push(right_end);
    sol.finish();
    Ok(sol)
}

impl ScalarSolution {
    fn finish(&mut self) {
        let n = self.problem.steps_per_delay;
        let last = self.t.len() - 1;
        self.breaking_points = (0..=last)
            .step_by(n)
            .enumerate()
            .map(|(index, k)| BreakingPoint {
                index,
                t: self.t[k],
                jumps: std::array::from_fn(|o| self.measure_jump(k, o + 1)),
            })
            .collect();
    }

    pub fn kind(&self) -> DelayKind {
        self.problem.kind()
    }

    pub fn delay(&self) -> f64 {
        self.problem.delay
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("solution has at least one node")
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.t.len()).map(move |k| Node {
            t: self.t[k],
            y: self.y[k],
            ydot_left: self.d_left[k],
            ydot_right: self.d_right[k],
        })
    }

    /// Breaking points `n * delay` up to the end of the solution.
    pub fn breaking_points(&self) -> &[BreakingPoint] {
        &self.breaking_points
    }

    fn step_index(&self, t: f64) -> usize {
        let last = self.t.len() - 1;
        if last == 0 {
            return 0;
        }
        let k = self.t.partition_point(|&tk| tk <= t).saturating_sub(1);
        k.min(last - 1)
    }

    /// Dense-output value. Uses the history for `t <= 0`.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.problem.history.value(t);
        }
        let k = self.step_index(t);
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d_right[k], self.d_left[k + 1]);
        let s = (t - self.t[k]) / self.h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * y0 + h10 * self.h * d0 + h01 * y1 + h11 * self.h * d1
    }

    /// Dense-output derivative; `side` selects the limit at grid nodes.
    pub fn derivative(&self, t: f64, side: Side) -> f64 {
        if t < 0.0 || (t == 0.0 && side == Side::Left) {
            return self.problem.history.derivative(t).unwrap_or(f64::NAN);
        }
        let mut k = self.step_index(t);
        if side == Side::Left && k > 0 && self.t[k] == t {
            k -= 1;
        }
        if self.t.len() == 1 {
            return self.d_right[0];
        }
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d_right[k], self.d_left[k + 1]);
        let s = (t - self.t[k]) / self.h;
        let (g00, g10, g01, g11) = (
            6.0 * s * (s - 1.0),
            (1.0 - s) * (1.0 - 3.0 * s),
            6.0 * s * (1.0 - s),
            s * (3.0 * s - 2.0),
        );
        (g00 * y0 + g01 * y1) / self.h + g10 * d0 + g11 * d1
    }

    /// `|y'(t) - rhs(...)|` evaluated on the dense output.
    pub fn residual(&self, t: f64) -> f64 {
        let tau = self.problem.delay;
        let lhs = self.derivative(t, Side::Right);
        let side = Side::Right;
        let rhs = self.problem.rhs.eval(self.value(t), self.value(t - tau), self.derivative(t - tau, side));
        (lhs - rhs).abs()
    }

    /// `y` at the `k`-th grid node, or the history for negative indices.
    fn sample(&self, k: isize) -> f64 {
        if k >= 0 {
            self.y[k as usize]
        } else {
            self.problem.history.value(k as f64 * self.h)
        }
    }

    /// One-sided slope at the `k`-th grid node (history slope for `k < 0`).
    fn sample_slope(&self, k: isize, side: Side) -> f64 {
        if k < 0 || (k == 0 && side == Side::Left) {
            return self.problem.history.derivative(k as f64 * self.h).unwrap_or(f64::NAN);
        }
        match side {
            Side::Left => self.d_left[k as usize],
            Side::Right => self.d_right[k as usize],
        }
    }

    /// Jump of the `order`-th derivative at grid node `k`.
    fn measure_jump(&self, k: usize, order: usize) -> Option<f64> {
        if order == 1 {
            let j = self.d_right[k] - self.d_left[k];
            if j.is_finite() {
                return Some(j);
            }
        }
        let n = self.problem.steps_per_delay;
        let last = self.t.len() - 1;
        let right_room = (last - k).min(n);
        // Left side always has a full delay available (history or solution).
        let right = self.one_sided_derivative(k, order, right_room, Side::Right)?;
        let left = self.one_sided_derivative(k, order, n, Side::Left)?;
        Some(right - left)
    }

    /// `order`-th derivative at node `k` of a polynomial interpolating nodes
    /// on one side only. Slopes are fitted when available (one derivative
    /// fewer to extract), otherwise values.
    fn one_sided_derivative(&self, k: usize, order: usize, room: usize, side: Side) -> Option<f64> {
        let degree = JUMP_FIT_DEGREE.min(room);
        let dir: isize = if side == Side::Right { 1 } else { -1 };
        let stride = (room / (JUMP_FIT_SPREAD * degree.max(1))).max(1);
        let spacing = stride as f64 * self.h;
        let idx = |j: usize| k as isize + dir * (j * stride) as isize;
        let nodes: Vec<f64> = (0..=degree).map(|j| dir as f64 * j as f64).collect();
        let slopes: Vec<f64> = (0..=degree).map(|j| self.sample_slope(idx(j), side)).collect();
        let (samples, d) = if slopes.iter().all(|s| s.is_finite()) {
            (slopes, order - 1)
        } else {
            ((0..=degree).map(|j| self.sample(idx(j))).collect(), order)
        };
        if degree < d || (d == order && degree < order) {
            return None;
        }
        let weights = fornberg_weights(&nodes, d);
        let sum: f64 = weights.iter().zip(&samples).map(|(w, s)| w * s).sum();
        Some(sum / spacing.powi(d as i32))
    }

    /// Jumps of the given order at each breaking point, where measurable.
    pub fn jump_profile(&self, order: usize) -> Result<Vec<(f64, f64)>, DelayError> {
        if !(1..=MAX_JUMP_ORDER).contains(&order) {
            return Err(DelayError::BadOrder(order));
        }
        Ok(self
            .breaking_points
            .iter()
            .filter_map(|bp| bp.jumps[order - 1].map(|j| (bp.t, j)))
            .collect())
    }
}

/// Weights of the `order`-th derivative at 0 of the polynomial interpolating
/// the points `nodes` (Fornberg's recursion).
fn fornberg_weights(nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for m in (1..=mn).rev() {
                    c[i][m] = c1 * (m as f64 * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for m in (1..=mn).rev() {
                c[j][m] = (c4 * c[j][m] - m as f64 * c[j][m - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}
