//! Piecewise-constant-velocity model of double-slit scattering.
//!
//! Units: `c = 1`, unit charge magnitude, electron mass `m_e = 1` unless a
//! config says otherwise. In these units `ħ = 1/α`.
//!
//! The pipeline: an Einstein-local four-momentum `(γ_i, P_i)` must be
//! continuous at each velocity jump; its vertical part estimates the closest
//! approach `L` of the scattered charge, and the recoil shared with the
//! nucleus fixes `c/(c - n·v) ≈ (√2 m_p/m_e)^{2/3}`, which turns `L` into a
//! De Broglie length `λ = (√2 m_p/m_e)^{2/3} / (m₃ |v₃|)`.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::Vec3;

/// `ħ` in units where `c = e = 1`, i.e. the inverse fine-structure constant.
pub const HBAR: f64 = 137.035999;
/// Proton to electron mass ratio.
pub const PROTON_ELECTRON_MASS_RATIO: f64 = 1836.15267;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlitError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("speed {0} is not below 1")]
    Superluminal(f64),
    #[error("lightcone distance r = {0} makes the configuration singular")]
    Singular(f64),
    #[error("denominator {0} is not positive")]
    NonPositiveDenominator(f64),
    #[error("quantum numbers must be positive, got ({0}, {1})")]
    QuantumNumbers(u32, u32),
    #[error("period L = {l} exceeds slit separation a = {a}")]
    PeriodTooLong { l: f64, a: f64 },
    #[error("no recoil solution for mass ratio {0}")]
    NoRecoil(f64),
}

/// Inputs of the De Broglie pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlitConfig {
    /// Slit separation.
    pub a: f64,
    pub m_scattered: f64,
    pub m_e: f64,
    /// Incoming speed of the scattered charge.
    pub v3: f64,
    /// `m_p / m_e`.
    pub mass_ratio: f64,
    pub n_electrons_per_site: u32,
    pub hbar: f64,
}

impl Default for SlitConfig {
    fn default() -> Self {
        SlitConfig {
            a: 1e5,
            m_scattered: 1.0,
            m_e: 1.0,
            v3: 0.01,
            mass_ratio: PROTON_ELECTRON_MASS_RATIO,
            n_electrons_per_site: 1,
            hbar: HBAR,
        }
    }
}

impl SlitConfig {
    pub fn validate(&self) -> Result<(), SlitError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SlitError::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("a", self.a)?;
        positive("m_scattered", self.m_scattered)?;
        positive("m_e", self.m_e)?;
        positive("mass_ratio", self.mass_ratio)?;
        positive("hbar", self.hbar)?;
        positive("v3", self.v3)?;
        if self.v3 >= 1.0 {
            return Err(SlitError::Superluminal(self.v3));
        }
        if self.n_electrons_per_site == 0 {
            return Err(SlitError::Config("n_electrons_per_site must be at least 1".into()));
        }
        Ok(())
    }

    pub fn m_p(&self) -> f64 {
        self.mass_ratio * self.m_e
    }
}

/// Lightcone data of one partner `j` as seen from particle `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartnerData {
    pub r_minus: f64,
    pub n_minus: Vec3,
    pub v_minus: Vec3,
    pub r_plus: f64,
    pub n_plus: Vec3,
    pub v_plus: Vec3,
}

impl PartnerData {
    /// A partner at rest at lightcone distance `r` along `n` on both branches.
    pub fn at_rest(r: f64, n: Vec3) -> Self {
        PartnerData { r_minus: r, n_minus: n, v_minus: Vec3::ZERO, r_plus: r, n_plus: n, v_plus: Vec3::ZERO }
    }
}

/// Einstein-local four-momentum `(γ_i, P_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMomentum {
    pub gamma: f64,
    pub p: Vec3,
}

/// `γ_i = m/√(1-v²) - Σ_j [½/(r₋(1 - n₋·v₋)) + ½/(r₊(1 + n₊·v₊))]`, and the
/// same with the partner velocities as numerators for `P_i`.
pub fn local_momentum(mass: f64, v: Vec3, partners: &[PartnerData]) -> Result<LocalMomentum, SlitError> {
    let speed2 = v.norm_squared();
    if speed2 >= 1.0 {
        return Err(SlitError::Superluminal(speed2.sqrt()));
    }
    let lorentz = 1.0 / (1.0 - speed2).sqrt();
    let mut gamma = mass * lorentz;
    let mut p = v * (mass * lorentz);
    for d in partners {
        for (r, n, vj, s) in [(d.r_minus, d.n_minus, d.v_minus, -1.0), (d.r_plus, d.n_plus, d.v_plus, 1.0)] {
            if !(r > 0.0) {
                return Err(SlitError::Singular(r));
            }
            let denom = r * (1.0 + s * n.dot(vj));
            if !(denom > 0.0) {
                return Err(SlitError::NonPositiveDenominator(denom));
            }
            gamma -= 0.5 / denom;
            p -= vj * (0.5 / denom);
        }
    }
    Ok(LocalMomentum { gamma, p })
}

/// One side of a velocity jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSide {
    pub velocity: Vec3,
    pub partners: Vec<PartnerData>,
}

/// A velocity discontinuity of a particle of mass `mass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityJump {
    pub mass: f64,
    pub pre: JumpSide,
    pub post: JumpSide,
}

/// Post-minus-pre change of `(γ, P)` across a jump; zero for a balanced event.
pub fn balance_residual(event: &VelocityJump) -> Result<(f64, Vec3), SlitError> {
    let pre = local_momentum(event.mass, event.pre.velocity, &event.pre.partners)?;
    let post = local_momentum(event.mass, event.post.velocity, &event.post.partners)?;
    Ok((post.gamma - pre.gamma, post.p - pre.p))
}

/// Closest approach `L = |v₁₋| / (m₃ |v₃| (1 - n₃₁·v₁₋))`.
pub fn closest_approach_l(config: &SlitConfig, v1_minus: Vec3, n31: Vec3) -> Result<f64, SlitError> {
    config.validate()?;
    let speed = v1_minus.norm();
    if speed >= 1.0 {
        return Err(SlitError::Superluminal(speed));
    }
    let denom = config.m_scattered * config.v3 * (1.0 - n31.dot(v1_minus));
    if !(denom > 0.0) {
        return Err(SlitError::NonPositiveDenominator(denom));
    }
    Ok(speed / denom)
}

/// [`closest_approach_l`] without equating the advanced and retarded
/// partner terms: each branch contributes half of the vertical balance.
pub fn closest_approach_l_exact(
    config: &SlitConfig,
    v1_minus: Vec3,
    n31_minus: Vec3,
    v1_plus: Vec3,
    n31_plus: Vec3,
) -> Result<f64, SlitError> {
    config.validate()?;
    let (sm, sp) = (v1_minus.norm(), v1_plus.norm());
    if sm >= 1.0 || sp >= 1.0 {
        return Err(SlitError::Superluminal(sm.max(sp)));
    }
    let (dm, dp) = (1.0 - n31_minus.dot(v1_minus), 1.0 + n31_plus.dot(v1_plus));
    if !(dm > 0.0 && dp > 0.0) {
        return Err(SlitError::NonPositiveDenominator(dm.min(dp)));
    }
    Ok((0.5 * sm / dm + 0.5 * sp / dp) / (config.m_scattered * config.v3))
}

/// `c/(c - n·v₁₋) = (√2 m_p/m_e)^{2/3}`.
pub fn recoil_factor(mass_ratio: f64) -> f64 {
    (SQRT_2 * mass_ratio).powf(2.0 / 3.0)
}

/// Recoil factor without the `v₁ → c` expansion: solves
/// `m_p (1 - v) √(1 - v²) = m_e` for the bound speed `v` and returns `1/(1 - v)`.
pub fn recoil_factor_exact(mass_ratio: f64) -> Result<f64, SlitError> {
    let f = |v: f64| mass_ratio * (1.0 - v) * (1.0 - v * v).sqrt() - 1.0;
    // f decreases on [-1/2, 1) from its maximum to -1.
    let (mut lo, mut hi) = (-0.5, 1.0);
    if !(mass_ratio > 0.0) || f(lo) < 0.0 {
        return Err(SlitError::NoRecoil(mass_ratio));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(1.0 / (1.0 - 0.5 * (lo + hi)))
}

/// De Broglie length with its comparison to `h/(m v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeBroglieEstimate {
    pub recoil_factor: f64,
    pub lambda_db: f64,
    /// `(2πħ / (m₃ |v₃|)) / λ`.
    pub ratio_to_h_over_mv: f64,
}

/// `λ = (√2 m_p/m_e)^{2/3} / (m₃ |v₃|)`. A site with `n` electrons and an
/// `n`-fold nucleus shares the recoil `n` ways and gives the same length.
pub fn de_broglie_length(config: &SlitConfig) -> Result<DeBroglieEstimate, SlitError> {
    config.validate()?;
    let n = config.n_electrons_per_site as f64;
    let ratio = (n * config.m_p()) / (n * config.m_e);
    let recoil = recoil_factor(ratio);
    let mv = config.m_scattered * config.v3;
    let lambda_db = recoil / mv;
    Ok(DeBroglieEstimate { recoil_factor: recoil, lambda_db, ratio_to_h_over_mv: TAU * config.hbar / mv / lambda_db })
}

/// Hydrogen-like line frequency `m e⁴ / (2ħ³) (1/n₁² - 1/n₂²)`.
pub fn line_frequency(m_e: f64, hbar: f64, n1: u32, n2: u32) -> Result<f64, SlitError> {
    if n1 == 0 || n2 == 0 {
        return Err(SlitError::QuantumNumbers(n1, n2));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    Ok(m_e / (2.0 * hbar.powi(3)) * (1.0 / (a * a) - 1.0 / (b * b)))
}

/// Doubling the nuclear mass rescales `ħ` by `2^{2/3}`; returns that line
/// frequency and the original-`ħ` frequency of the `(2n₁, 2n₂)` line.
pub fn isotope_scaling_check(n1: u32, n2: u32) -> Result<(f64, f64), SlitError> {
    let lhs = line_frequency(1.0, 2f64.powf(2.0 / 3.0) * HBAR, n1, n2)?;
    let rhs = line_frequency(1.0, HBAR, 2 * n1, 2 * n2)?;
    Ok((lhs, rhs))
}

/// Slit separation `a = ħ/(m v)` for significant scattering.
pub fn slit_separation_estimate(m: f64, v: f64) -> f64 {
    HBAR / (m * v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BraggDirection {
    pub n: i32,
    /// Radians; negative orders give negative angles.
    pub theta: f64,
    pub theta_deg: f64,
}

/// Directions with `a sin θ = n L` for `|n| <= n_max`; orders without a real
/// angle are skipped, the forward direction is always present.
pub fn bragg_directions(a: f64, l: f64, n_max: u32) -> Result<Vec<BraggDirection>, SlitError> {
    if !(a > 0.0 && a.is_finite() && l > 0.0 && l.is_finite()) {
        return Err(SlitError::Config(format!("a and L must be positive, got a={a}, L={l}")));
    }
    if l > a {
        return Err(SlitError::PeriodTooLong { l, a });
    }
    let n_max = n_max.min(i32::MAX as u32) as i32;
    Ok((-n_max..=n_max)
        .filter_map(|n| {
            let s = n as f64 * l / a;
            (s.abs() <= 1.0).then(|| {
                let theta = s.asin();
                BraggDirection { n, theta, theta_deg: theta * 180.0 / PI }
            })
        })
        .collect())
}
