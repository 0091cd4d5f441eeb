//! Piecewise-polynomial worldlines with explicit breakpoint bookkeeping.
//!
//! A [`PiecewiseTrajectory`] is a charge's position as a function of
//! coordinate time, stored as contiguous cubic segments. Positions are
//! continuous everywhere; velocity and acceleration may jump at the knots
//! between segments, and every interior knot carries a [`Breakpoint`] record
//! of those jumps. Evaluation at a knot is one-sided ([`Side`]).
//!
//! The scalar [`HistoryFunction`] used to seed delay equations also lives
//! here, since it plays the same role for scalar problems that a trajectory
//! plays for charges: prescribed data on a past interval.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::vec3::Vec3;

/// Default speed ceiling. Keeps the lightcone fixed-point map a contraction.
pub const DEFAULT_V_MAX: f64 = 0.99;

/// Samples per segment used by the sub-luminal audit.
const SPEED_AUDIT_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory has no segments")]
    Empty,
    #[error("segment [{t_start}, {t_end}] is empty or reversed")]
    BadSegment { t_start: f64, t_end: f64 },
    #[error("non-finite polynomial coefficient in segment starting at t={t_start}")]
    NonFinite { t_start: f64 },
    #[error("segments not contiguous: one ends at {end}, next starts at {start}")]
    Gap { end: f64, start: f64 },
    #[error("position jumps by {jump:e} at t={t}")]
    PositionJump { t: f64, jump: f64 },
    #[error("speed {speed} at t={t} exceeds v_max={v_max}")]
    Superluminal { t: f64, speed: f64, v_max: f64 },
    #[error("v_max={0} must lie in (0, 1)")]
    BadVMax(f64),
    #[error("mass must be positive and finite, got {0}")]
    BadMass(f64),
    #[error("charge must be finite, got {0}")]
    BadCharge(f64),
    #[error("t={t} outside trajectory domain [{t_start}, {t_end}]")]
    OutOfDomain { t: f64, t_start: f64, t_end: f64 },
    #[error("t={0} coincides with an existing segment boundary")]
    DuplicateBreakpoint(f64),
    #[error("recorded breakpoint data disagree with segment polynomials at t={0}")]
    InconsistentBreakpoint(f64),
    #[error("history domain [{t_min}, 0] invalid or shorter than delay {delay}")]
    HistoryDomain { t_min: f64, delay: f64 },
}

/// Which one-sided limit to take at a knot. Away from knots both sides agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kinematics {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

/// One cubic piece of a worldline.
///
/// `coeffs[c][k]` multiplies `(t - t_start)^k` in spatial component `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(rename = "t0")]
    pub t_start: f64,
    #[serde(rename = "t1")]
    pub t_end: f64,
    pub coeffs: [[f64; 4]; 3],
}

impl Segment {
    pub fn new(t_start: f64, t_end: f64, coeffs: [[f64; 4]; 3]) -> Result<Self, TrajectoryError> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(TrajectoryError::BadSegment { t_start, t_end });
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(TrajectoryError::NonFinite { t_start });
        }
        Ok(Segment { t_start, t_end, coeffs })
    }

    pub fn stationary(t_start: f64, t_end: f64, x: Vec3) -> Result<Self, TrajectoryError> {
        Self::taylor(t_start, t_end, x, Vec3::ZERO, Vec3::ZERO, Vec3::ZERO)
    }

    /// Straight line through `x0` at `t_start` with constant velocity `v`.
    pub fn linear(t_start: f64, t_end: f64, x0: Vec3, v: Vec3) -> Result<Self, TrajectoryError> {
        Self::taylor(t_start, t_end, x0, v, Vec3::ZERO, Vec3::ZERO)
    }

    /// Segment with prescribed position, velocity, acceleration and jerk at `t_start`.
    pub fn taylor(
        t_start: f64,
        t_end: f64,
        x: Vec3,
        v: Vec3,
        a: Vec3,
        jerk: Vec3,
    ) -> Result<Self, TrajectoryError> {
        let mut coeffs = [[0.0; 4]; 3];
        for (c, row) in coeffs.iter_mut().enumerate() {
            *row = [
                x.component(c),
                v.component(c),
                0.5 * a.component(c),
                jerk.component(c) / 6.0,
            ];
        }
        Self::new(t_start, t_end, coeffs)
    }

    /// Cubic Hermite segment matching positions and velocities at both ends.
    pub fn hermite(
        t_start: f64,
        t_end: f64,
        x0: Vec3,
        v0: Vec3,
        x1: Vec3,
        v1: Vec3,
    ) -> Result<Self, TrajectoryError> {
        let h = t_end - t_start;
        let mut coeffs = [[0.0; 4]; 3];
        for (c, row) in coeffs.iter_mut().enumerate() {
            let (p0, m0, p1, m1) = (x0.component(c), v0.component(c), x1.component(c), v1.component(c));
            let d = p1 - p0;
            row[0] = p0;
            row[1] = m0;
            row[2] = (3.0 * d - h * (2.0 * m0 + m1)) / (h * h);
            row[3] = (h * (m0 + m1) - 2.0 * d) / (h * h * h);
        }
        Self::new(t_start, t_end, coeffs)
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// `order`-th time derivative at global time `t`. The polynomial is
    /// evaluated even outside `[t_start, t_end]`.
    pub fn derivative(&self, order: usize, t: f64) -> Vec3 {
        let tau = t - self.t_start;
        Vec3::new(
            poly_derivative(&self.coeffs[0], order, tau),
            poly_derivative(&self.coeffs[1], order, tau),
            poly_derivative(&self.coeffs[2], order, tau),
        )
    }

    pub fn position(&self, t: f64) -> Vec3 {
        self.derivative(0, t)
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        self.derivative(1, t)
    }

    pub fn acceleration(&self, t: f64) -> Vec3 {
        self.derivative(2, t)
    }

    /// Start position, read straight from the constant coefficients.
    pub fn start_position(&self) -> Vec3 {
        Vec3::new(self.coeffs[0][0], self.coeffs[1][0], self.coeffs[2][0])
    }

    /// Largest sampled speed, endpoints included.
    pub fn max_speed(&self) -> (f64, f64) {
        let h = self.duration();
        (0..=SPEED_AUDIT_SAMPLES)
            .map(|i| {
                let t = self.t_start + h * i as f64 / SPEED_AUDIT_SAMPLES as f64;
                (self.velocity(t).norm(), t)
            })
            .fold((0.0, self.t_start), |best, cur| if cur.0 > best.0 { cur } else { best })
    }

    fn translated(&self, dx: Vec3) -> Segment {
        let mut s = self.clone();
        for c in 0..3 {
            s.coeffs[c][0] += dx.component(c);
        }
        s
    }
}

/// Derivative of a cubic with coefficients `c` (ascending powers) at `tau`.
fn poly_derivative(c: &[f64; 4], order: usize, tau: f64) -> f64 {
    match order {
        0 => c[0] + tau * (c[1] + tau * (c[2] + tau * c[3])),
        1 => c[1] + tau * (2.0 * c[2] + tau * 3.0 * c[3]),
        2 => 2.0 * c[2] + 6.0 * c[3] * tau,
        3 => 6.0 * c[3],
        _ => 0.0,
    }
}

/// Coefficients of `p(alpha + beta * tau)` for a cubic `p`.
fn compose_affine(c: &[f64; 4], alpha: f64, beta: f64) -> [f64; 4] {
    // Taylor-expand p about alpha, then scale by powers of beta.
    let d = [
        poly_derivative(c, 0, alpha),
        poly_derivative(c, 1, alpha),
        poly_derivative(c, 2, alpha) / 2.0,
        poly_derivative(c, 3, alpha) / 6.0,
    ];
    [d[0], d[1] * beta, d[2] * beta * beta, d[3] * beta * beta * beta]
}

/// Jump record at an interior knot. Jumps are right limit minus left limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    /// Lowest derivative order that jumps: 1 velocity, 2 acceleration,
    /// 3 jerk. `None` for a smooth knot. Order 0 (position) never occurs.
    pub order: Option<u32>,
    pub v_jump: Vec3,
    pub a_jump: Vec3,
}

impl Breakpoint {
    pub fn velocity_jump(&self) -> f64 {
        self.v_jump.norm()
    }

    pub fn acceleration_jump(&self) -> f64 {
        self.a_jump.norm()
    }

    pub fn is_smooth(&self) -> bool {
        self.order.is_none()
    }
}

fn is_nonzero_jump(jump: Vec3, reference: Vec3) -> bool {
    jump.max_abs() > 1e-13 * (1.0 + reference.max_abs())
}

/// A charge's worldline: contiguous cubic segments plus mass and charge.
///
/// Immutable after construction. [`insert_breakpoint`](Self::insert_breakpoint)
/// returns a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTrajectory {
    segments: Vec<Segment>,
    breakpoints: Vec<Breakpoint>,
    mass: f64,
    charge: f64,
    v_max: f64,
}

impl PiecewiseTrajectory {
    pub fn new(segments: Vec<Segment>, mass: f64, charge: f64) -> Result<Self, TrajectoryError> {
        Self::with_v_max(segments, mass, charge, DEFAULT_V_MAX)
    }

    pub fn with_v_max(
        segments: Vec<Segment>,
        mass: f64,
        charge: f64,
        v_max: f64,
    ) -> Result<Self, TrajectoryError> {
        if !(v_max > 0.0 && v_max < 1.0) {
            return Err(TrajectoryError::BadVMax(v_max));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(TrajectoryError::BadMass(mass));
        }
        if !charge.is_finite() {
            return Err(TrajectoryError::BadCharge(charge));
        }
        if segments.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for s in &segments {
            Segment::new(s.t_start, s.t_end, s.coeffs)?;
            let (speed, t) = s.max_speed();
            if speed > v_max {
                return Err(TrajectoryError::Superluminal { t, speed, v_max });
            }
        }
        let mut breakpoints = Vec::with_capacity(segments.len() - 1);
        for pair in segments.windows(2) {
            let (left, right) = (&pair[0], &pair[1]);
            if left.t_end != right.t_start {
                return Err(TrajectoryError::Gap { end: left.t_end, start: right.t_start });
            }
            let t = right.t_start;
            let x_left = left.position(t);
            let x_right = right.start_position();
            let jump = (x_right - x_left).norm();
            if jump > 1e-12 * (1.0 + x_right.max_abs()) {
                return Err(TrajectoryError::PositionJump { t, jump });
            }
            let v_jump = right.velocity(t) - left.velocity(t);
            let a_jump = right.acceleration(t) - left.acceleration(t);
            let j_jump = right.derivative(3, t) - left.derivative(3, t);
            let order = if is_nonzero_jump(v_jump, right.velocity(t)) {
                Some(1)
            } else if is_nonzero_jump(a_jump, right.acceleration(t)) {
                Some(2)
            } else if is_nonzero_jump(j_jump, right.derivative(3, t)) {
                Some(3)
            } else {
                None
            };
            breakpoints.push(Breakpoint { t, order, v_jump, a_jump });
        }
        Ok(PiecewiseTrajectory { segments, breakpoints, mass, charge, v_max })
    }

    /// A charge at rest at `x` over `[t_start, t_end]`.
    pub fn stationary(
        x: Vec3,
        t_start: f64,
        t_end: f64,
        mass: f64,
        charge: f64,
    ) -> Result<Self, TrajectoryError> {
        Self::new(vec![Segment::stationary(t_start, t_end, x)?], mass, charge)
    }

    /// Uniform motion, passing through `x0` at `t = 0`.
    pub fn uniform(
        x0: Vec3,
        v: Vec3,
        t_start: f64,
        t_end: f64,
        mass: f64,
        charge: f64,
    ) -> Result<Self, TrajectoryError> {
        let seg = Segment::linear(t_start, t_end, x0 + v * t_start, v)?;
        Self::new(vec![seg], mass, charge)
    }

    /// Piecewise-constant-velocity path through `(t_i, x_i)` waypoints.
    pub fn polyline(points: &[(f64, Vec3)], mass: f64, charge: f64) -> Result<Self, TrajectoryError> {
        if points.len() < 2 {
            return Err(TrajectoryError::Empty);
        }
        let segments = points
            .windows(2)
            .map(|w| {
                let ((t0, x0), (t1, x1)) = (w[0], w[1]);
                Segment::linear(t0, t1, x0, (x1 - x0) / (t1 - t0))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(segments, mass, charge)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Interior knots, in time order.
    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn t_start(&self) -> f64 {
        self.segments[0].t_start
    }

    pub fn t_end(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start() && t <= self.t_end()
    }

    fn domain_error(&self, t: f64) -> TrajectoryError {
        TrajectoryError::OutOfDomain { t, t_start: self.t_start(), t_end: self.t_end() }
    }

    /// Index of the segment that supplies the `side` limit at `t`.
    fn segment_index(&self, t: f64, side: Side) -> usize {
        let n = self.segments.len();
        let i = self.segments.partition_point(|s| s.t_start <= t);
        let i = i.saturating_sub(1).min(n - 1);
        if side == Side::Left && i > 0 && self.segments[i].t_start == t {
            i - 1
        } else {
            i
        }
    }

    /// Knot index `k` such that `t` is the start of segment `k`, if any.
    fn knot_at(&self, t: f64) -> Option<usize> {
        let i = self.segments.partition_point(|s| s.t_start < t);
        (i > 0 && i < self.segments.len() && self.segments[i].t_start == t).then_some(i)
    }

    /// One-sided position, velocity and acceleration at `t`.
    pub fn eval(&self, t: f64, side: Side) -> Result<Kinematics, TrajectoryError> {
        if !self.contains(t) {
            return Err(self.domain_error(t));
        }
        Ok(self.eval_unchecked(t, side))
    }

    /// Like [`eval`](Self::eval) but clamps `t` into the domain.
    pub(crate) fn eval_clamped(&self, t: f64, side: Side) -> Kinematics {
        self.eval_unchecked(t.clamp(self.t_start(), self.t_end()), side)
    }

    fn eval_unchecked(&self, t: f64, side: Side) -> Kinematics {
        let seg = &self.segments[self.segment_index(t, side)];
        let position = match self.knot_at(t) {
            Some(k) => self.segments[k].start_position(),
            None => seg.position(t),
        };
        Kinematics { position, velocity: seg.velocity(t), acceleration: seg.acceleration(t) }
    }

    pub fn position(&self, t: f64) -> Result<Vec3, TrajectoryError> {
        Ok(self.eval(t, Side::Right)?.position)
    }

    /// Third derivative (jerk) on the `side` segment.
    pub fn jerk(&self, t: f64, side: Side) -> Result<Vec3, TrajectoryError> {
        if !self.contains(t) {
            return Err(self.domain_error(t));
        }
        Ok(self.segments[self.segment_index(t, side)].derivative(3, t))
    }

    /// True when `t` lies within `tol` of an interior knot.
    pub fn near_breakpoint(&self, t: f64, tol: f64) -> bool {
        let i = self.breakpoints.partition_point(|b| b.t < t);
        let near = |j: usize| self.breakpoints.get(j).is_some_and(|b| (b.t - t).abs() <= tol);
        near(i) || (i > 0 && near(i - 1))
    }

    /// Splits the segment containing `t` and gives the right part velocity
    /// `new_right_velocity`. Acceleration and jerk carry over unchanged, so
    /// only the velocity jumps. Later segments are translated rigidly to
    /// keep the worldline continuous.
    pub fn insert_breakpoint(&self, t: f64, new_right_velocity: Vec3) -> Result<Self, TrajectoryError> {
        if !self.contains(t) || !new_right_velocity.is_finite() {
            return Err(self.domain_error(t));
        }
        if t == self.t_start() || t == self.t_end() || self.knot_at(t).is_some() {
            return Err(TrajectoryError::DuplicateBreakpoint(t));
        }
        let i = self.segment_index(t, Side::Right);
        let old = &self.segments[i];
        let k = self.eval_unchecked(t, Side::Right);
        let left = Segment::new(old.t_start, t, old.coeffs)?;
        let right = Segment::taylor(
            t,
            old.t_end,
            k.position,
            new_right_velocity,
            k.acceleration,
            old.derivative(3, t),
        )?;
        let shift = right.position(old.t_end) - old.position(old.t_end);

        let mut segments = Vec::with_capacity(self.segments.len() + 1);
        segments.extend_from_slice(&self.segments[..i]);
        segments.push(left);
        segments.push(right);
        segments.extend(self.segments[i + 1..].iter().map(|s| s.translated(shift)));
        Self::with_v_max(segments, self.mass, self.charge, self.v_max)
    }

    /// The worldline `s -> x(-s)`.
    pub fn time_reversed(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| {
                let len = s.duration();
                let mut coeffs = [[0.0; 4]; 3];
                for c in 0..3 {
                    coeffs[c] = compose_affine(&s.coeffs[c], len, -1.0);
                }
                Segment { t_start: -s.t_end, t_end: -s.t_start, coeffs }
            })
            .collect::<Vec<_>>();
        // Re-pin knot positions to the neighbour's exact start value.
        let mut segments = segments;
        for k in 1..segments.len() {
            let end = segments[k - 1].position(segments[k - 1].t_end);
            for c in 0..3 {
                segments[k].coeffs[c][0] = end.component(c);
            }
        }
        Self::with_v_max(segments, self.mass, self.charge, self.v_max)
            .expect("time reversal preserves trajectory invariants")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryJson {
    mass: f64,
    charge: f64,
    segments: Vec<Segment>,
    #[serde(default)]
    breakpoints: Option<Vec<Breakpoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_max: Option<f64>,
}

impl Serialize for PiecewiseTrajectory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TrajectoryJson {
            mass: self.mass,
            charge: self.charge,
            segments: self.segments.clone(),
            breakpoints: Some(self.breakpoints.clone()),
            v_max: (self.v_max != DEFAULT_V_MAX).then_some(self.v_max),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PiecewiseTrajectory {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = TrajectoryJson::deserialize(deserializer)?;
        let traj = PiecewiseTrajectory::with_v_max(
            raw.segments,
            raw.mass,
            raw.charge,
            raw.v_max.unwrap_or(DEFAULT_V_MAX),
        )
        .map_err(serde::de::Error::custom)?;
        if let Some(recorded) = raw.breakpoints {
            let consistent = recorded.len() == traj.breakpoints.len()
                && recorded.iter().zip(&traj.breakpoints).all(|(r, b)| {
                    r.t == b.t
                        && r.order == b.order
                        && (r.v_jump - b.v_jump).max_abs() <= 1e-12 * (1.0 + b.v_jump.max_abs())
                        && (r.a_jump - b.a_jump).max_abs() <= 1e-12 * (1.0 + b.a_jump.max_abs())
                });
            if !consistent {
                let t = recorded.first().map_or(f64::NAN, |b| b.t);
                return Err(serde::de::Error::custom(TrajectoryError::InconsistentBreakpoint(t)));
            }
        }
        Ok(traj)
    }
}

/// Smoothness class of a history segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C1,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial data `y(t)` on `[t_min, 0]` for a scalar delay equation.
#[derive(Clone)]
pub struct HistoryFunction {
    t_min: f64,
    value: ScalarFn,
    derivative: Option<ScalarFn>,
}

impl fmt::Debug for HistoryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HistoryFunction")
            .field("t_min", &self.t_min)
            .field("smoothness", &self.smoothness())
            .finish()
    }
}

impl HistoryFunction {
    /// Continuous history with no derivative information.
    pub fn c0(
        t_min: f64,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, TrajectoryError> {
        Self::check_domain(t_min)?;
        Ok(HistoryFunction { t_min, value: Arc::new(value), derivative: None })
    }

    /// Continuously differentiable history with its derivative.
    pub fn c1(
        t_min: f64,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, TrajectoryError> {
        Self::check_domain(t_min)?;
        Ok(HistoryFunction {
            t_min,
            value: Arc::new(value),
            derivative: Some(Arc::new(derivative)),
        })
    }

    pub fn constant(t_min: f64, c: f64) -> Result<Self, TrajectoryError> {
        Self::c1(t_min, move |_| c, |_| 0.0)
    }

    /// `y(t) = intercept + slope * t`.
    pub fn linear(t_min: f64, slope: f64, intercept: f64) -> Result<Self, TrajectoryError> {
        Self::c1(t_min, move |t| intercept + slope * t, move |_| slope)
    }

    fn check_domain(t_min: f64) -> Result<(), TrajectoryError> {
        if t_min.is_finite() && t_min < 0.0 {
            Ok(())
        } else {
            Err(TrajectoryError::HistoryDomain { t_min, delay: f64::NAN })
        }
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn smoothness(&self) -> Smoothness {
        if self.derivative.is_some() {
            Smoothness::C1
        } else {
            Smoothness::C0
        }
    }

    /// True when the history reaches back at least `delay`.
    pub fn covers(&self, delay: f64) -> bool {
        -self.t_min >= delay
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    /// Derivative on the history; at `t = 0` this is the left derivative.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(t))
    }
}
