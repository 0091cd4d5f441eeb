//! Far (radiation) fields of accelerated point charges and the resulting
//! low-velocity equations of motion.
//!
//! Only the `1/r`, acceleration-dependent part of the Liénard–Wiechert field
//! is kept. For a source of charge `q` seen on the lightcone branch with sign
//! `s` (`+1` advanced, `-1` retarded) and `D = 1 + s n·v`:
//!
//! ```text
//! E = q n × [(n + s v) × a] / (r D³)
//! B = q s (n / r) × [a / D² - s (n·a) v / D³]
//! ```
//!
//! The bracket in `B` is the second derivative of `x_k(t_k(t))` with respect
//! to the observation time, so equivalently `B = q s (n/r) × ẍ` and
//! `E = s n × B`. Fields at a point are the semi-sum of both branches.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lightcone::{solve_lightcone, Branch, LightconeError, LightconeHit};
use crate::trajectory::{PiecewiseTrajectory, Side, TrajectoryError};
use crate::vec3::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("partner {partner}: lightcone time {t_dev} is beyond the simulated span")]
    HorizonExceeded { partner: usize, t_dev: f64 },
    #[error("partner {partner}: {source}")]
    Lightcone { partner: usize, source: LightconeError },
    #[error("particle index {index} out of range for {count} trajectories")]
    BadIndex { index: usize, count: usize },
    #[error("three-body equation needs exactly 3 trajectories, got {0}")]
    WrongBodyCount(usize),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

impl FieldError {
    fn from_lightcone(partner: usize, e: LightconeError) -> Self {
        match e {
            LightconeError::OutOfDomain { t_dev, .. } => FieldError::HorizonExceeded { partner, t_dev },
            source => FieldError::Lightcone { partner, source },
        }
    }
}

/// Field of one branch together with the lightcone data it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchField {
    pub e: Vec3,
    pub b: Vec3,
    pub hit: LightconeHit,
}

/// Second derivative of `x_k(t_k(t))` with respect to observation time.
///
/// The direction `n` is held fixed when differentiating `t_k(t)`; the
/// neglected `dn/dt` piece is a near-field `1/r²` correction.
pub fn far_acceleration(hit: &LightconeHit) -> Vec3 {
    let s = hit.branch.sign();
    let d = hit.denominator();
    hit.a_dev / (d * d) - hit.v_dev * (s * hit.n.dot(hit.a_dev) / (d * d * d))
}

/// Liénard–Wiechert far fields of a charge `q` from its lightcone data.
pub fn fields_pm_from_hit(hit: &LightconeHit, q: f64) -> (Vec3, Vec3) {
    let s = hit.branch.sign();
    let (n, v, a, r) = (hit.n, hit.v_dev, hit.a_dev, hit.r);
    let d = hit.denominator();
    let e = n.cross((n + v * s).cross(a)) * (q / (r * d * d * d));
    let b = n.cross(a / (d * d) - v * (s * n.dot(a) / (d * d * d))) * (q * s / r);
    (e, b)
}

/// The same fields written through the observation-time acceleration.
pub fn fields_simple_from_hit(hit: &LightconeHit, q: f64) -> (Vec3, Vec3) {
    let s = hit.branch.sign();
    let b = hit.n.cross(far_acceleration(hit)) * (q * s / hit.r);
    let e = hit.n.cross(b) * s;
    (e, b)
}

/// Far fields of `traj` at `(x, t)` from the direct Liénard–Wiechert form.
pub fn far_fields_pm(
    traj: &PiecewiseTrajectory,
    x: Vec3,
    t: f64,
    branch: Branch,
) -> Result<BranchField, LightconeError> {
    let hit = solve_lightcone(traj, x, t, branch)?;
    let (e, b) = fields_pm_from_hit(&hit, traj.charge());
    Ok(BranchField { e, b, hit })
}

/// Far fields of `traj` at `(x, t)` from the chain-rule form.
pub fn far_fields_simple(
    traj: &PiecewiseTrajectory,
    x: Vec3,
    t: f64,
    branch: Branch,
) -> Result<BranchField, LightconeError> {
    let hit = solve_lightcone(traj, x, t, branch)?;
    let (e, b) = fields_simple_from_hit(&hit, traj.charge());
    Ok(BranchField { e, b, hit })
}

/// Advanced, retarded and semi-sum fields at one event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub e_plus: Vec3,
    pub e_minus: Vec3,
    pub b_plus: Vec3,
    pub b_minus: Vec3,
    pub n_plus: Vec3,
    pub n_minus: Vec3,
    pub e: Vec3,
    pub b: Vec3,
    /// Some lightcone time sits on a knot, where the field is double-valued.
    pub at_breakpoint: bool,
}

impl FieldSample {
    fn from_branches(adv: &BranchField, ret: &BranchField) -> Self {
        FieldSample {
            e_plus: adv.e,
            e_minus: ret.e,
            b_plus: adv.b,
            b_minus: ret.b,
            n_plus: adv.hit.n,
            n_minus: ret.hit.n,
            e: (adv.e + ret.e) * 0.5,
            b: (adv.b + ret.b) * 0.5,
            at_breakpoint: adv.hit.at_breakpoint || ret.hit.at_breakpoint,
        }
    }

    fn accumulate(&mut self, o: &FieldSample) {
        self.e_plus += o.e_plus;
        self.e_minus += o.e_minus;
        self.b_plus += o.b_plus;
        self.b_minus += o.b_minus;
        self.e += o.e;
        self.b += o.b;
        self.at_breakpoint |= o.at_breakpoint;
    }
}

/// Semi-sum field of a single source.
pub fn semi_sum(traj: &PiecewiseTrajectory, x: Vec3, t: f64) -> Result<FieldSample, LightconeError> {
    let adv = far_fields_pm(traj, x, t, Branch::Advanced)?;
    let ret = far_fields_pm(traj, x, t, Branch::Retarded)?;
    Ok(FieldSample::from_branches(&adv, &ret))
}

/// Semi-sum field at particle `k`'s position due to every other particle.
/// The per-branch members hold sums over sources; `n_plus`/`n_minus` are
/// those of the last source.
pub fn partner_fields(k: usize, trajs: &[PiecewiseTrajectory], t: f64) -> Result<FieldSample, FieldError> {
    check_index(k, trajs.len())?;
    let x = trajs[k].eval(t, Side::Right)?.position;
    let mut total: Option<FieldSample> = None;
    for (j, src) in trajs.iter().enumerate().filter(|(j, _)| *j != k) {
        let f = semi_sum(src, x, t).map_err(|e| FieldError::from_lightcone(j, e))?;
        match total.as_mut() {
            None => total = Some(f),
            Some(acc) => {
                acc.accumulate(&f);
                acc.n_plus = f.n_plus;
                acc.n_minus = f.n_minus;
            }
        }
    }
    Ok(total.unwrap_or(FieldSample {
        e_plus: Vec3::ZERO,
        e_minus: Vec3::ZERO,
        b_plus: Vec3::ZERO,
        b_minus: Vec3::ZERO,
        n_plus: Vec3::ZERO,
        n_minus: Vec3::ZERO,
        e: Vec3::ZERO,
        b: Vec3::ZERO,
        at_breakpoint: false,
    }))
}

/// `q_k (E + v_k × B)` with semi-sum fields of all other charges; equals
/// `m_k ẍ_k`. Particle `k` is evaluated from the right at its own knots.
pub fn lorentz_rhs(k: usize, trajs: &[PiecewiseTrajectory], t: f64) -> Result<Vec3, FieldError> {
    let f = partner_fields(k, trajs, t)?;
    let kin = trajs[k].eval(t, Side::Right)?;
    Ok((f.e + kin.velocity.cross(f.b)) * trajs[k].charge())
}

/// Whether the low-velocity equation keeps the observer-velocity factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityTerms {
    /// Each term is `(n/r) × [n × ẍ_j]`.
    Dropped,
    /// Each term is `((n ± v_k)/r) × [n × ẍ_j]`.
    Included,
}

/// Four-term low-velocity force on particle `k` of a three-body system:
/// both branches of both partners, each weighted by `q_k q_j`.
pub fn lowvel_rhs_3body(
    k: usize,
    trajs: &[PiecewiseTrajectory],
    t: f64,
    velocity: VelocityTerms,
) -> Result<Vec3, FieldError> {
    if trajs.len() != 3 {
        return Err(FieldError::WrongBodyCount(trajs.len()));
    }
    check_index(k, 3)?;
    let kin = trajs[k].eval(t, Side::Right)?;
    let vk = match velocity {
        VelocityTerms::Dropped => Vec3::ZERO,
        VelocityTerms::Included => kin.velocity,
    };
    let mut total = Vec3::ZERO;
    for (j, src) in trajs.iter().enumerate().filter(|(j, _)| *j != k) {
        for branch in Branch::BOTH {
            let hit = solve_lightcone(src, kin.position, t, branch).map_err(|e| FieldError::from_lightcone(j, e))?;
            total += lowvel_term(&hit, vk, trajs[k].charge() * src.charge());
        }
    }
    Ok(total)
}

/// One term `q_k q_j ((n + s v_k)/r) × [n × ẍ_j]`.
pub fn lowvel_term(hit: &LightconeHit, vk: Vec3, charge_product: f64) -> Vec3 {
    let s = hit.branch.sign();
    let lever = (hit.n + vk * s) / hit.r;
    lever.cross(hit.n.cross(far_acceleration(hit))) * charge_product
}

fn check_index(k: usize, count: usize) -> Result<(), FieldError> {
    if k < count {
        Ok(())
    } else {
        Err(FieldError::BadIndex { index: k, count })
    }
}
