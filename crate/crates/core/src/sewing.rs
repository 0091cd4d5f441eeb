//! Chains of breaking points carried back and forth between two worldlines
//! along forward lightcones.
//!
//! A velocity discontinuity on worldline `i` at `t_n` shows up on partner `j`
//! where the future lightcone of `(x_i(t_n), t_n)` meets it,
//!
//! ```text
//! t_{n+1} = t_n + |x_i(t_n) - x_j(t_{n+1})|,
//! ```
//!
//! and is then reflected back the same way. Chains are computed on given
//! worldlines; nothing here solves the equations of motion.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lightcone::{solve_lightcone, Branch, LightconeError};
use crate::trajectory::{PiecewiseTrajectory, Segment, TrajectoryError};
use crate::vec3::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SewingError {
    #[error("trajectory index {index} out of range for {count} trajectories")]
    BadIndex { index: usize, count: usize },
    #[error("a chain needs two distinct trajectories")]
    SameTrajectory,
    #[error("source time {0} is outside its trajectory")]
    SourceOutsideDomain(f64),
    #[error("need at least 3 events for spacings, chain has {0}")]
    TooShort(usize),
    #[error("bad orbit parameters: {0}")]
    BadOrbit(&'static str),
    #[error(transparent)]
    Lightcone(#[from] LightconeError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// A breaking point on one worldline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityEvent {
    pub trajectory: usize,
    pub t: f64,
    pub generation: usize,
    /// Lightcone residual of the hop that produced this event (0 for a source).
    pub residual: f64,
}

impl DiscontinuityEvent {
    pub fn source(trajectory: usize, t: f64) -> Self {
        DiscontinuityEvent { trajectory, t, generation: 0, residual: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SewingChain {
    pub pair: (usize, usize),
    /// Events in generation order, the source first.
    pub events: Vec<DiscontinuityEvent>,
    pub requested_steps: usize,
    /// The worldlines ended before all requested hops were made.
    pub truncated: bool,
}

impl SewingChain {
    pub fn source(&self) -> &DiscontinuityEvent {
        &self.events[0]
    }

    /// Hops actually made.
    pub fn steps(&self) -> usize {
        self.events.len() - 1
    }

    /// Largest hop residual.
    pub fn max_residual(&self) -> f64 {
        self.events.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

/// Follows `n_steps` forward lightcone hops alternating between the source's
/// trajectory and `partner`. Running off either worldline truncates the chain.
pub fn propagate_chain(
    trajs: &[PiecewiseTrajectory],
    source: DiscontinuityEvent,
    partner: usize,
    n_steps: usize,
) -> Result<SewingChain, SewingError> {
    let count = trajs.len();
    for index in [source.trajectory, partner] {
        if index >= count {
            return Err(SewingError::BadIndex { index, count });
        }
    }
    if source.trajectory == partner {
        return Err(SewingError::SameTrajectory);
    }
    if !trajs[source.trajectory].contains(source.t) {
        return Err(SewingError::SourceOutsideDomain(source.t));
    }
    let mut events = vec![DiscontinuityEvent { generation: 0, ..source }];
    let mut truncated = false;
    let (mut here, mut there) = (source.trajectory, partner);
    while events.len() <= n_steps {
        let last = events[events.len() - 1];
        let x = trajs[here].position(last.t)?;
        match solve_lightcone(&trajs[there], x, last.t, Branch::Advanced) {
            Ok(hit) => events.push(DiscontinuityEvent {
                trajectory: there,
                t: hit.t_dev,
                generation: last.generation + 1,
                residual: hit.residual(),
            }),
            Err(LightconeError::OutOfDomain { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
        std::mem::swap(&mut here, &mut there);
    }
    Ok(SewingChain { pair: (source.trajectory, partner), events, requested_steps: n_steps, truncated })
}

/// Same-trajectory revisit intervals `t_{n+2} - t_n`.
pub fn chain_spacings(chain: &SewingChain) -> Result<Vec<f64>, SewingError> {
    if chain.events.len() < 3 {
        return Err(SewingError::TooShort(chain.events.len()));
    }
    Ok(chain.events.windows(3).map(|w| w[2].t - w[0].t).collect())
}

/// `|last spacing - period| / period`; a measurement of how close a chain
/// has come to a given resonance period.
pub fn resonance_gap(chain: &SewingChain, period: f64) -> Result<f64, SewingError> {
    let s = chain_spacings(chain)?;
    Ok((s[s.len() - 1] - period).abs() / period)
}

/// Two charges at rest, `r` apart along x, on `[t0, t1]`.
pub fn static_pair(r: f64, t0: f64, t1: f64) -> Result<Vec<PiecewiseTrajectory>, SewingError> {
    Ok(vec![
        PiecewiseTrajectory::stationary(Vec3::ZERO, t0, t1, 1.0, -1.0)?,
        PiecewiseTrajectory::stationary(Vec3::new(r, 0.0, 0.0), t0, t1, 1.0, -1.0)?,
    ])
}

/// A charge at rest at the origin and a second one starting at `(d0, 0, 0)`
/// at `t = 0` and moving straight at it with `speed`, up to time `t1`.
pub fn head_on_approach(d0: f64, speed: f64, t1: f64) -> Result<Vec<PiecewiseTrajectory>, SewingError> {
    if !(d0 > 0.0 && speed > 0.0 && speed < 1.0 && t1 > 0.0 && speed * t1 < d0) {
        return Err(SewingError::BadOrbit("need 0 < speed < 1 and no collision before t1"));
    }
    Ok(vec![
        PiecewiseTrajectory::stationary(Vec3::ZERO, 0.0, t1, 1.0, -1.0)?,
        PiecewiseTrajectory::uniform(Vec3::new(d0, 0.0, 0.0), Vec3::new(-speed, 0.0, 0.0), 0.0, t1, 1.0, -1.0)?,
    ])
}

/// Two sites at rest at `(0, ±a/2, 0)` and a third charge travelling down the
/// x axis towards their midpoint. It starts at `x = d0` with `speed`, brakes
/// uniformly from `x = a` and comes to rest at the midpoint, where it stays
/// until `t1`. Index order: site `+a/2`, site `-a/2`, incoming charge.
pub fn central_approach(a: f64, d0: f64, speed: f64, t1: f64) -> Result<Vec<PiecewiseTrajectory>, SewingError> {
    if !(a > 0.0 && d0 > a && speed > 0.0 && speed < 1.0) {
        return Err(SewingError::BadOrbit("need a > 0, d0 > a, 0 < speed < 1"));
    }
    let t_brake = (d0 - a) / speed;
    let t_rest = t_brake + 2.0 * a / speed;
    if t1 <= t_rest {
        return Err(SewingError::BadOrbit("horizon ends before the charge comes to rest"));
    }
    let decel = speed * speed / (2.0 * a);
    let segments = vec![
        Segment::linear(0.0, t_brake, Vec3::new(d0, 0.0, 0.0), Vec3::new(-speed, 0.0, 0.0))?,
        Segment::taylor(
            t_brake,
            t_rest,
            Vec3::new(a, 0.0, 0.0),
            Vec3::new(-speed, 0.0, 0.0),
            Vec3::new(decel, 0.0, 0.0),
            Vec3::ZERO,
        )?,
        Segment::stationary(t_rest, t1, Vec3::ZERO)?,
    ];
    Ok(vec![
        PiecewiseTrajectory::stationary(Vec3::new(0.0, 0.5 * a, 0.0), 0.0, t1, 1.0, -1.0)?,
        PiecewiseTrajectory::stationary(Vec3::new(0.0, -0.5 * a, 0.0), 0.0, t1, 1.0, -1.0)?,
        PiecewiseTrajectory::new(segments, 1.0, -1.0)?,
    ])
}

/// Shape of a bound periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitShape {
    /// Circle in the xy plane, smooth cubic Hermite pieces.
    Circular,
    /// Straight back-and-forth motion along x with velocity reversals.
    PingPong,
}

/// Periodic bound motion of radius `radius` and `period` about `center` on `[t0, t1]`.
pub fn bound_orbit(
    shape: OrbitShape,
    center: Vec3,
    radius: f64,
    period: f64,
    t0: f64,
    t1: f64,
) -> Result<PiecewiseTrajectory, SewingError> {
    if !(radius > 0.0 && period > 0.0 && t1 > t0) {
        return Err(SewingError::BadOrbit("radius, period and span must be positive"));
    }
    let pieces_per_period = match shape {
        OrbitShape::Circular => 32,
        OrbitShape::PingPong => 2,
    };
    let dt = period / pieces_per_period as f64;
    let n = ((t1 - t0) / dt).ceil() as usize;
    let times: Vec<f64> = (0..=n).map(|k| if k == n { t1 } else { t0 + k as f64 * dt }).collect();
    let traj = match shape {
        OrbitShape::Circular => {
            let omega = TAU / period;
            let state = |t: f64| {
                let ph = omega * (t - t0);
                (
                    center + Vec3::new(ph.cos(), ph.sin(), 0.0) * radius,
                    Vec3::new(-ph.sin(), ph.cos(), 0.0) * (radius * omega),
                )
            };
            let mut segments = Vec::with_capacity(n);
            for w in times.windows(2) {
                let ((x0, v0), (x1, v1)) = (state(w[0]), state(w[1]));
                segments.push(Segment::hermite(w[0], w[1], x0, v0, x1, v1)?);
            }
            PiecewiseTrajectory::new(segments, 1.0, -1.0)?
        }
        OrbitShape::PingPong => {
            let pos = |t: f64| {
                // Triangle wave starting at +radius.
                let ph = ((t - t0) / period).rem_euclid(1.0);
                let u = if ph < 0.5 { 1.0 - 4.0 * ph } else { 4.0 * ph - 3.0 };
                center + Vec3::new(u * radius, 0.0, 0.0)
            };
            let pts: Vec<(f64, Vec3)> = times.iter().map(|&t| (t, pos(t))).collect();
            PiecewiseTrajectory::polyline(&pts, 1.0, -1.0)?
        }
    };
    Ok(traj)
}
