//! Advanced and retarded times on a worldline as seen from a field point.
//!
//! For an observation event `(x, t)` and a charge worldline `x_k(s)`, the
//! retarded (`-`) and advanced (`+`) times solve
//!
//! ```text
//! t_k = t ± |x_k(t_k) - x|
//! ```
//!
//! and are unique for sub-luminal worldlines. The lightcone distance is
//! `r = |x_k(t_k) - x|`, and `n = (x - x_k(t_k)) / r` points from the charge
//! towards the observer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{PiecewiseTrajectory, Side, TrajectoryError};
use crate::vec3::Vec3;

/// Tolerance of the fixed-point stage, relative to `1 + |t|`.
const COARSE_TOL: f64 = 1e-6;
/// Final tolerance on the implicit equation, relative to `1 + |t|`.
pub const LIGHTCONE_TOL: f64 = 1e-12;
const MAX_FIXED_POINT_ITERS: usize = 20_000;
const MAX_POLISH_ITERS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LightconeError {
    #[error("lightcone time {t_dev} lies outside the trajectory domain [{t_start}, {t_end}]")]
    OutOfDomain { t_dev: f64, t_start: f64, t_end: f64 },
    #[error("observation point lies on the worldline at t={t_dev}; no direction defined")]
    Coincident { t_dev: f64 },
    #[error("1 ± n·v = {denominator} is not above 1 - v_max = {floor}")]
    Singular { denominator: f64, floor: f64 },
    #[error("lightcone iteration did not converge (last step {step})")]
    NoConvergence { step: f64 },
    #[error("non-finite observation event")]
    NonFinite,
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Which lightcone of the observation event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Retarded,
    Advanced,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Advanced, Branch::Retarded];

    /// `-1` for retarded, `+1` for advanced.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Retarded => -1.0,
            Branch::Advanced => 1.0,
        }
    }

    /// The side from which kinematics are taken when the deviating time
    /// falls on a knot: the past for retarded, the future for advanced.
    pub fn causal_side(self) -> Side {
        match self {
            Branch::Retarded => Side::Left,
            Branch::Advanced => Side::Right,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Retarded => "retarded",
            Branch::Advanced => "advanced",
        }
    }
}

/// Solution of the lightcone equation plus the partner kinematics there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightconeHit {
    pub branch: Branch,
    /// Observation time.
    pub t: f64,
    pub t_dev: f64,
    pub r: f64,
    /// Unit vector from the charge to the observer.
    pub n: Vec3,
    /// Charge position at `t_dev`.
    pub position: Vec3,
    pub v_dev: Vec3,
    pub a_dev: Vec3,
    pub dtdev_dt: f64,
    /// `t_dev` coincides with a trajectory knot; kinematics are the causal-side limit.
    pub at_breakpoint: bool,
    /// Speed bound of the source trajectory.
    pub v_max: f64,
}

impl LightconeHit {
    /// `|t_dev - t ∓ r|`.
    pub fn residual(&self) -> f64 {
        (self.t_dev - self.t - self.branch.sign() * self.r).abs()
    }

    /// `1 ± n·v` at the deviating time.
    pub fn denominator(&self) -> f64 {
        1.0 + self.branch.sign() * self.n.dot(self.v_dev)
    }
}

/// `dt_dev/dt = 1 / (1 ± n·v_dev)` for the given branch.
pub fn deviating_derivative(hit: &LightconeHit, branch: Branch) -> Result<f64, LightconeError> {
    let denominator = 1.0 + branch.sign() * hit.n.dot(hit.v_dev);
    let floor = 1.0 - hit.v_max;
    // Slack absorbs round-off in n·v for speeds sitting exactly at v_max.
    if !(denominator > floor - 1e-12) || denominator <= 0.0 {
        return Err(LightconeError::Singular { denominator, floor });
    }
    Ok(1.0 / denominator)
}

/// Finds the branch's lightcone time on `traj` for the event `(x, t)`.
pub fn solve_lightcone(
    traj: &PiecewiseTrajectory,
    x: Vec3,
    t: f64,
    branch: Branch,
) -> Result<LightconeHit, LightconeError> {
    if !x.is_finite() || !t.is_finite() {
        return Err(LightconeError::NonFinite);
    }
    let s = branch.sign();
    let side = branch.causal_side();
    let scale = 1.0 + t.abs();
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let out_of_domain = |t_dev| LightconeError::OutOfDomain { t_dev, t_start: t0, t_end: t1 };

    // Contraction with constant <= v_max; the clamped worldline is extended
    // by rest outside its domain, so the iterate always stays defined.
    let map = |tau: f64| t + s * (traj.eval_clamped(tau, side).position - x).norm();
    let mut tau = map(t);
    let mut converged = false;
    for _ in 0..MAX_FIXED_POINT_ITERS {
        let next = map(tau);
        let step = (next - tau).abs();
        tau = next;
        if step <= COARSE_TOL * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LightconeError::NoConvergence { step: (map(tau) - tau).abs() });
    }

    // g is strictly increasing (g' = 1 ± n·v >= 1 - v_max), so bracket and polish.
    let g = |tau: f64| tau - map(tau);
    let slack = 1e-9 * scale;
    if tau < t0 - slack && g(t0) > 0.0 {
        return Err(out_of_domain(tau));
    }
    if tau > t1 + slack && g(t1) < 0.0 {
        return Err(out_of_domain(tau));
    }
    let mut lo = (tau - 1e3 * COARSE_TOL * scale).max(t0);
    let mut hi = (tau + 1e3 * COARSE_TOL * scale).min(t1);
    if g(lo) > 0.0 {
        lo = t0;
    }
    if g(hi) < 0.0 {
        hi = t1;
    }
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo > 0.0 {
        return Err(out_of_domain(tau));
    }
    if g_hi < 0.0 {
        return Err(out_of_domain(tau));
    }
    tau = tau.clamp(lo, hi);
    let tol = 0.25 * LIGHTCONE_TOL * scale;
    let mut gt = g(tau);
    for _ in 0..MAX_POLISH_ITERS {
        if gt.abs() <= tol {
            break;
        }
        if gt < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let k = traj.eval_clamped(tau, side);
        let d = k.position - x;
        let r = d.norm();
        let slope = if r > 0.0 { 1.0 - s * d.dot(k.velocity) / r } else { 1.0 };
        let mut next = tau - gt / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == tau || hi - lo <= f64::EPSILON * scale {
            break;
        }
        tau = next;
        gt = g(tau);
    }

    // Snap onto a knot when indistinguishable from it.
    let mut at_breakpoint = false;
    if let Some(knot) = nearest_knot(traj, tau) {
        if (knot - tau).abs() <= LIGHTCONE_TOL * (1.0 + tau.abs()) {
            tau = knot;
            at_breakpoint = true;
        }
    }

    let k = traj.eval(tau, side)?;
    let d = x - k.position;
    let r = d.norm();
    if r == 0.0 {
        return Err(LightconeError::Coincident { t_dev: tau });
    }
    let n = d / r;
    let mut hit = LightconeHit {
        branch,
        t,
        t_dev: tau,
        r,
        n,
        position: k.position,
        v_dev: k.velocity,
        a_dev: k.acceleration,
        dtdev_dt: f64::NAN,
        at_breakpoint,
        v_max: traj.v_max(),
    };
    hit.dtdev_dt = deviating_derivative(&hit, branch)?;
    if hit.residual() > LIGHTCONE_TOL * scale {
        return Err(LightconeError::NoConvergence { step: hit.residual() });
    }
    Ok(hit)
}

/// Retarded and advanced hits together.
pub fn solve_both(
    traj: &PiecewiseTrajectory,
    x: Vec3,
    t: f64,
) -> Result<(LightconeHit, LightconeHit), LightconeError> {
    Ok((solve_lightcone(traj, x, t, Branch::Retarded)?, solve_lightcone(traj, x, t, Branch::Advanced)?))
}

fn nearest_knot(traj: &PiecewiseTrajectory, t: f64) -> Option<f64> {
    let bps = traj.breakpoints();
    let i = bps.partition_point(|b| b.t < t);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter_map(|j| bps.get(j).map(|b| b.t))
        .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moving() -> PiecewiseTrajectory {
        PiecewiseTrajectory::uniform(Vec3::ZERO, Vec3::new(0.5, 0.0, 0.0), -10.0, 10.0, 1.0, -1.0).unwrap()
    }

    #[test]
    fn static_source() {
        let traj = PiecewiseTrajectory::stationary(Vec3::ZERO, -10.0, 10.0, 1.0, -1.0).unwrap();
        let hit = solve_lightcone(&traj, Vec3::new(2.0, 0.0, 0.0), 5.0, Branch::Retarded).unwrap();
        assert_eq!(hit.t_dev, 3.0);
        assert_eq!(hit.r, 2.0);
        assert_eq!(hit.n, Vec3::X);
        assert_eq!(hit.dtdev_dt, 1.0);
        assert!(!hit.at_breakpoint);
    }

    #[test]
    fn moving_source_both_branches() {
        let (ret, adv) = solve_both(&moving(), Vec3::ZERO, 1.5).unwrap();
        assert!((ret.t_dev - 1.0).abs() < 1e-12 && (ret.r - 0.5).abs() < 1e-12);
        assert!((adv.t_dev - 3.0).abs() < 1e-12 && (adv.r - 1.5).abs() < 1e-12);
        assert!((ret.n - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((ret.dtdev_dt - 2.0 / 3.0).abs() < 1e-12);
        // Advanced: n·v = -0.5 so 1/(1 - 0.5) = 2.
        assert!((adv.dtdev_dt - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deviating_derivative_formula() {
        let mut hit = solve_lightcone(&moving(), Vec3::ZERO, 1.5, Branch::Retarded).unwrap();
        hit.v_dev = Vec3::ZERO;
        assert_eq!(deviating_derivative(&hit, Branch::Retarded).unwrap(), 1.0);
        hit.n = Vec3::X;
        hit.v_dev = Vec3::new(-0.5, 0.0, 0.0);
        assert!((deviating_derivative(&hit, Branch::Retarded).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        hit.v_dev = Vec3::new(0.5, 0.0, 0.0);
        assert!((deviating_derivative(&hit, Branch::Advanced).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        hit.v_dev = Vec3::new(-0.995, 0.0, 0.0);
        assert!(matches!(deviating_derivative(&hit, Branch::Advanced), Err(LightconeError::Singular { .. })));
    }

    #[test]
    fn root_outside_domain() {
        let traj = PiecewiseTrajectory::stationary(Vec3::ZERO, 0.0, 4.0, 1.0, -1.0).unwrap();
        let e = solve_lightcone(&traj, Vec3::new(3.0, 0.0, 0.0), 2.0, Branch::Retarded).unwrap_err();
        assert!(matches!(e, LightconeError::OutOfDomain { t_dev, .. } if (t_dev + 1.0).abs() < 1e-5), "{e:?}");
        let e = solve_lightcone(&traj, Vec3::new(3.0, 0.0, 0.0), 2.0, Branch::Advanced).unwrap_err();
        assert!(matches!(e, LightconeError::OutOfDomain { .. }));
    }

    #[test]
    fn observer_on_worldline() {
        let e = solve_lightcone(&moving(), Vec3::new(1.0, 0.0, 0.0), 2.0, Branch::Retarded).unwrap_err();
        assert!(matches!(e, LightconeError::Coincident { .. }), "{e:?}");
    }

    #[test]
    fn knot_takes_causal_side() {
        // Velocity jumps at t = 0; observer at distance 2 sees the knot at t = 2 (retarded) and t = -2 (advanced).
        let traj = PiecewiseTrajectory::polyline(
            &[(-5.0, Vec3::ZERO), (0.0, Vec3::ZERO), (5.0, Vec3::new(0.0, 0.5, 0.0))],
            1.0,
            -1.0,
        )
        .unwrap();
        let x = Vec3::new(2.0, 0.0, 0.0);
        let ret = solve_lightcone(&traj, x, 2.0, Branch::Retarded).unwrap();
        assert!(ret.at_breakpoint && ret.t_dev == 0.0);
        assert_eq!(ret.v_dev, Vec3::ZERO);
        let adv = solve_lightcone(&traj, x, -2.0, Branch::Advanced).unwrap();
        assert!(adv.at_breakpoint && adv.t_dev == 0.0);
        assert_eq!(adv.v_dev, Vec3::new(0.0, 0.1, 0.0));
    }
}
