//! Numerical toolkit for state-dependent neutral delay equations of point-charge
//! electrodynamics.
//!
//! * [`trajectory`]: piecewise-cubic worldlines with breakpoint bookkeeping.
//! * [`delay`]: method-of-steps solver for scalar retarded and neutral delay
//!   equations, with breaking-point jump measurement.
//! * [`lightcone`]: advanced/retarded time solver.
//! * [`farfield`]: Liénard–Wiechert far fields and equation-of-motion forces.
//! * [`sewing`]: propagation of discontinuities between worldlines.
//! * [`slit`]: piecewise-constant-velocity double-slit estimates.
//! * [`crystal`]: periodic-potential scattering and the von Laue condition.

pub mod crystal;
pub mod delay;
pub mod farfield;
pub mod lightcone;
pub mod sewing;
pub mod slit;
pub mod trajectory;
pub mod vec3;

pub use trajectory::{
    Breakpoint, HistoryFunction, Kinematics, PiecewiseTrajectory, Segment, Side, Smoothness,
    TrajectoryError, DEFAULT_V_MAX,
};
pub use vec3::Vec3;
